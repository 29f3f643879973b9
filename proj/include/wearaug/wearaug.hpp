#pragma once

#include "wearaug/augment.hpp"
#include "wearaug/cnn/adam.hpp"
#include "wearaug/cnn/gradcheck.hpp"
#include "wearaug/cnn/layers.hpp"
#include "wearaug/cnn/model.hpp"
#include "wearaug/dataset.hpp"
#include "wearaug/error.hpp"
#include "wearaug/eval.hpp"
#include "wearaug/features.hpp"
#include "wearaug/io.hpp"
#include "wearaug/preprocess.hpp"
#include "wearaug/random.hpp"
#include "wearaug/synth.hpp"
#include "wearaug/tensor.hpp"
#include "wearaug/window.hpp"
