#pragma once

#include "conneckt/directivity.hpp"
#include "conneckt/ensemble.hpp"
#include "conneckt/error.hpp"
#include "conneckt/evaluation.hpp"
#include "conneckt/inference.hpp"
#include "conneckt/io.hpp"
#include "conneckt/parallel.hpp"
#include "conneckt/pipeline.hpp"
#include "conneckt/synthgen.hpp"
#include "conneckt/types.hpp"
