#pragma once

#include "kvqe/common.hpp"
#include "kvqe/operators.hpp"
#include "kvqe/integrals.hpp"
#include "kvqe/hamiltonian.hpp"
#include "kvqe/pfcidump.hpp"
#include "kvqe/models.hpp"
#include "kvqe/pool.hpp"
#include "kvqe/sparse.hpp"
#include "kvqe/state.hpp"
#include "kvqe/fci.hpp"
#include "kvqe/optimizer.hpp"
#include "kvqe/vqe.hpp"
#include "kvqe/k2g.hpp"
#include "kvqe/qse.hpp"
#include "kvqe/diagnostics.hpp"
#include "kvqe/experiment.hpp"
