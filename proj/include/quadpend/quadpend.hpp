#pragma once

#include "quadpend/errors.hpp"
#include "quadpend/models.hpp"
#include "quadpend/numerics/care.hpp"
#include "quadpend/numerics/integrator.hpp"
#include "quadpend/numerics/linearize.hpp"
#include "quadpend/numerics/qp.hpp"
#include "quadpend/controllers/gains.hpp"
#include "quadpend/controllers/fbl.hpp"
#include "quadpend/controllers/allocation.hpp"
#include "quadpend/controllers/clf_qp.hpp"
#include "quadpend/controllers/pendulum.hpp"
#include "quadpend/controllers/lqr.hpp"
#include "quadpend/trajectories.hpp"
#include "quadpend/harness/scenario.hpp"
#include "quadpend/harness/simulator.hpp"
#include "quadpend/harness/metrics.hpp"
#include "quadpend/io/scenario_file.hpp"
#include "quadpend/io/emit.hpp"
