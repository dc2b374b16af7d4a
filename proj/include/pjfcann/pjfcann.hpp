// Umbrella header.
#pragma once

#include "pjfcann/autodiff.hpp"
#include "pjfcann/checkpoint.hpp"
#include "pjfcann/coattention.hpp"
#include "pjfcann/corpus.hpp"
#include "pjfcann/encoders.hpp"
#include "pjfcann/experiment.hpp"
#include "pjfcann/fusion.hpp"
#include "pjfcann/ggnn.hpp"
#include "pjfcann/gradcheck.hpp"
#include "pjfcann/gradcheck_suite.hpp"
#include "pjfcann/history_graph.hpp"
#include "pjfcann/model.hpp"
#include "pjfcann/ops.hpp"
#include "pjfcann/optim.hpp"
#include "pjfcann/pairs.hpp"
#include "pjfcann/parameter.hpp"
#include "pjfcann/similarity.hpp"
#include "pjfcann/tensor.hpp"
#include "pjfcann/text.hpp"
#include "pjfcann/training.hpp"
