#pragma once

// Umbrella header for the temporal interferometer simulator.

#include "analysis.hpp"
#include "evolution.hpp"
#include "io.hpp"
#include "model.hpp"
#include "montecarlo.hpp"
#include "scenarios.hpp"
#include "temporal.hpp"
