#pragma once

#include "ipkit/calibrate.hpp"
#include "ipkit/correspond.hpp"
#include "ipkit/describe.hpp"
#include "ipkit/detect.hpp"
#include "ipkit/errors.hpp"
#include "ipkit/evaluate.hpp"
#include "ipkit/image.hpp"
#include "ipkit/image_io.hpp"
#include "ipkit/irredundant.hpp"
#include "ipkit/json_io.hpp"
#include "ipkit/pipeline.hpp"
#include "ipkit/rng.hpp"
