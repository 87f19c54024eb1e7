#pragma once

// Umbrella header for the spectral least-squares extension solvers.

#include "pe/chebyshev.hpp"
#include "pe/curves.hpp"
#include "pe/elliptic.hpp"
#include "pe/evolution.hpp"
#include "pe/extension.hpp"
#include "pe/fourier.hpp"
#include "pe/geometry.hpp"
#include "pe/harness.hpp"
#include "pe/legendre.hpp"
#include "pe/lsq.hpp"
#include "pe/navier_stokes.hpp"
#include "pe/pext.hpp"
#include "pe/problems.hpp"
#include "pe/quadrature.hpp"
#include "pe/stokes_channel.hpp"
#include "pe/stokes_sphere.hpp"
#include "pe/stokes_torus.hpp"
#include "pe/types.hpp"
#include "pe/viscoelastic.hpp"
