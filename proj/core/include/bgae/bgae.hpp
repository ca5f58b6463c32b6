#pragma once

#include "bgae/checkpoint.hpp"
#include "bgae/diffusion.hpp"
#include "bgae/errors.hpp"
#include "bgae/evaluation.hpp"
#include "bgae/experiment.hpp"
#include "bgae/graph.hpp"
#include "bgae/losses.hpp"
#include "bgae/model.hpp"
#include "bgae/optim.hpp"
#include "bgae/synthetic.hpp"
#include "bgae/tensor.hpp"
#include "bgae/training.hpp"
