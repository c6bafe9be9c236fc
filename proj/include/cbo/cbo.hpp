#pragma once

#include "cbo/config.hpp"
#include "cbo/core.hpp"
#include "cbo/dataset.hpp"
#include "cbo/diagnostics.hpp"
#include "cbo/engine.hpp"
#include "cbo/harness.hpp"
#include "cbo/matrix.hpp"
#include "cbo/objectives.hpp"
#include "cbo/oracle.hpp"
#include "cbo/rng.hpp"
