#pragma once

// Umbrella header.

#include "sinegan/checkpoint.hpp"
#include "sinegan/classifier.hpp"
#include "sinegan/common.hpp"
#include "sinegan/config.hpp"
#include "sinegan/discriminator.hpp"
#include "sinegan/dsp.hpp"
#include "sinegan/evaluation.hpp"
#include "sinegan/generator.hpp"
#include "sinegan/nn.hpp"
#include "sinegan/objectives.hpp"
#include "sinegan/optim.hpp"
#include "sinegan/reports.hpp"
#include "sinegan/rng.hpp"
#include "sinegan/signal.hpp"
#include "sinegan/tensor.hpp"
#include "sinegan/training.hpp"
#include "sinegan/wav.hpp"
#include "sinegan/window.hpp"
