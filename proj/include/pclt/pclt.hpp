#pragma once

#include "core.hpp"
#include "rng.hpp"
#include "geometry.hpp"
#include "linalg.hpp"
#include "process.hpp"
#include "gilbert.hpp"
#include "model.hpp"
#include "bounds.hpp"
#include "verify.hpp"
#include "report.hpp"
