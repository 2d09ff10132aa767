#pragma once

// Umbrella header.

#include "polyiso/calculus.hpp"
#include "polyiso/circulant.hpp"
#include "polyiso/constant_lab.hpp"
#include "polyiso/constraints.hpp"
#include "polyiso/convexifier.hpp"
#include "polyiso/error.hpp"
#include "polyiso/io.hpp"
#include "polyiso/manifold.hpp"
#include "polyiso/polygon.hpp"
