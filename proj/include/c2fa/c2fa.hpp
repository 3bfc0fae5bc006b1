#pragma once

// Umbrella header.

#include "c2fa/admm.hpp"
#include "c2fa/baselines.hpp"
#include "c2fa/errors.hpp"
#include "c2fa/experiment.hpp"
#include "c2fa/io.hpp"
#include "c2fa/kernels.hpp"
#include "c2fa/kkt.hpp"
#include "c2fa/metrics.hpp"
#include "c2fa/nested.hpp"
#include "c2fa/perturbation.hpp"
#include "c2fa/ridge.hpp"
#include "c2fa/rng.hpp"
#include "c2fa/synthetic.hpp"
#include "c2fa/types.hpp"
