#pragma once

#include "blowup/diagnostics.hpp"
#include "blowup/energy.hpp"
#include "blowup/errors.hpp"
#include "blowup/io.hpp"
#include "blowup/model.hpp"
#include "blowup/ode_profile.hpp"
#include "blowup/pipeline.hpp"
#include "blowup/quadrature.hpp"
#include "blowup/similarity.hpp"
#include "blowup/wave_solver.hpp"
