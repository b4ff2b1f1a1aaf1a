#pragma once

#include "iqt/binary_io.hpp"
#include "iqt/config.hpp"
#include "iqt/coupled_dictionary.hpp"
#include "iqt/dataset.hpp"
#include "iqt/degrade.hpp"
#include "iqt/enhance.hpp"
#include "iqt/error.hpp"
#include "iqt/evaluate.hpp"
#include "iqt/features.hpp"
#include "iqt/interpolate.hpp"
#include "iqt/lasso.hpp"
#include "iqt/metrics.hpp"
#include "iqt/omp.hpp"
#include "iqt/parallel.hpp"
#include "iqt/patch.hpp"
#include "iqt/pca.hpp"
#include "iqt/phantom.hpp"
#include "iqt/random.hpp"
#include "iqt/snr.hpp"
#include "iqt/sparse_code.hpp"
#include "iqt/train.hpp"
#include "iqt/volume.hpp"
