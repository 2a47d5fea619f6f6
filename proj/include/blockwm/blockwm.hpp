#pragma once

#include "attacks.hpp"
#include "bch.hpp"
#include "bits.hpp"
#include "detector.hpp"
#include "generation.hpp"
#include "gf2m.hpp"
#include "harness.hpp"
#include "keying.hpp"
#include "theory.hpp"
