#pragma once

#include "tensorsplit/decomp.hpp"
#include "tensorsplit/epsdim.hpp"
#include "tensorsplit/equivalence.hpp"
#include "tensorsplit/error.hpp"
#include "tensorsplit/gamma.hpp"
#include "tensorsplit/index_core.hpp"
#include "tensorsplit/parallel.hpp"
#include "tensorsplit/quad.hpp"
#include "tensorsplit/regress.hpp"
#include "tensorsplit/sensitivity.hpp"
#include "tensorsplit/sequence.hpp"
#include "tensorsplit/weights.hpp"
