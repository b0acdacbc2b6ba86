// Copyright 2026 The fogdx Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "fogdx/broker.hpp"
#include "fogdx/config.hpp"
#include "fogdx/ensemble.hpp"
#include "fogdx/error.hpp"
#include "fogdx/harness.hpp"
#include "fogdx/heartdata.hpp"
#include "fogdx/metrics.hpp"
#include "fogdx/net.hpp"
#include "fogdx/neuralnet.hpp"
#include "fogdx/node.hpp"
#include "fogdx/pipeline.hpp"
#include "fogdx/protocol.hpp"
#include "fogdx/random.hpp"
#include "fogdx/worker.hpp"
