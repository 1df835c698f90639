#pragma once

#include "stc/archive.hpp"
#include "stc/dataset.hpp"
#include "stc/errors.hpp"
#include "stc/experiment.hpp"
#include "stc/explain.hpp"
#include "stc/metrics.hpp"
#include "stc/model.hpp"
#include "stc/parallel.hpp"
#include "stc/policy.hpp"
#include "stc/policy_search.hpp"
#include "stc/sparse_tensor.hpp"
#include "stc/tokenizer.hpp"
