#pragma once

// Umbrella header: cellular sheaves on graphs, sheaf convolutional networks,
// their tangent kernels, a kernel-regression machine, and spectral
// diagnostics.

#include "sntk/activation.hpp"
#include "sntk/diagnostics.hpp"
#include "sntk/diffusion.hpp"
#include "sntk/errors.hpp"
#include "sntk/graph.hpp"
#include "sntk/io.hpp"
#include "sntk/kernel_machine.hpp"
#include "sntk/laplacian.hpp"
#include "sntk/ntk.hpp"
#include "sntk/scn.hpp"
#include "sntk/sheaf.hpp"
