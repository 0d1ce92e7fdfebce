#pragma once

#include "pack/error.hpp"
#include "pack/grid.hpp"
#include "pack/geometry.hpp"
#include "pack/mesh.hpp"
#include "pack/heightfield.hpp"
#include "pack/container.hpp"
#include "pack/image_io.hpp"
#include "pack/sequence.hpp"
#include "pack/heuristics.hpp"
#include "pack/settle.hpp"
#include "pack/reward.hpp"
#include "pack/episode.hpp"
#include "pack/policy.hpp"
#include "pack/manifest.hpp"
#include "pack/bench.hpp"
#include "pack/wire.hpp"
