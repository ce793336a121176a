#pragma once

#include "regibox/core.hpp"
#include "regibox/embedding_store.hpp"
#include "regibox/synthetic.hpp"
#include "regibox/optim.hpp"
#include "regibox/box_net.hpp"
#include "regibox/region_sampler.hpp"
#include "regibox/linear_probe.hpp"
#include "regibox/eval.hpp"
