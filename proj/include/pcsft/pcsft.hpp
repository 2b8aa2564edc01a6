#pragma once

#include "pcsft/core_types.hpp"
#include "pcsft/detector.hpp"
#include "pcsft/error.hpp"
#include "pcsft/experiment.hpp"
#include "pcsft/io.hpp"
#include "pcsft/linalg.hpp"
#include "pcsft/matrix.hpp"
#include "pcsft/mode_dynamics.hpp"
#include "pcsft/oracle.hpp"
#include "pcsft/rng.hpp"
#include "pcsft/stats.hpp"
#include "pcsft/wiener.hpp"
