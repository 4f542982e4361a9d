#pragma once

// Umbrella header for the MFRNet post-processing library.

#include "mfrnet/adam.hpp"
#include "mfrnet/common.hpp"
#include "mfrnet/dataset.hpp"
#include "mfrnet/degrade.hpp"
#include "mfrnet/filter.hpp"
#include "mfrnet/frame.hpp"
#include "mfrnet/inference.hpp"
#include "mfrnet/metrics.hpp"
#include "mfrnet/network.hpp"
#include "mfrnet/parallel.hpp"
#include "mfrnet/rng.hpp"
#include "mfrnet/tensor.hpp"
#include "mfrnet/tiling.hpp"
#include "mfrnet/train.hpp"
#include "mfrnet/weights_io.hpp"
#include "mfrnet/yuv_io.hpp"
