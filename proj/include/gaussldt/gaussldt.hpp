#pragma once

#include "config.hpp"
#include "csv.hpp"
#include "errors.hpp"
#include "fock.hpp"
#include "ftcheck.hpp"
#include "ldf.hpp"
#include "linalg.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "phasespace.hpp"
#include "presets.hpp"
#include "solver.hpp"
#include "sweep.hpp"
