#pragma once

#include "iot/estimate.hpp"
#include "iot/forward.hpp"
#include "iot/identify.hpp"
#include "iot/io.hpp"
#include "iot/linalg.hpp"
#include "iot/lp.hpp"
#include "iot/polytope.hpp"
#include "iot/random.hpp"
#include "iot/rational.hpp"
#include "iot/types.hpp"
