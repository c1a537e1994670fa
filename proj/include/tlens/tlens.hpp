// Copyright 2026 The tlens Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tlens/dataset.hpp"
#include "tlens/error.hpp"
#include "tlens/exif.hpp"
#include "tlens/focus.hpp"
#include "tlens/image.hpp"
#include "tlens/io.hpp"
#include "tlens/lens.hpp"
#include "tlens/metrics.hpp"
#include "tlens/pipeline.hpp"
