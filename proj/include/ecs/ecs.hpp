#ifndef ECS_ECS_HPP
#define ECS_ECS_HPP

#include "ecs/adversary.hpp"
#include "ecs/avoider.hpp"
#include "ecs/bitstring.hpp"
#include "ecs/distribution.hpp"
#include "ecs/forbidden.hpp"
#include "ecs/io.hpp"
#include "ecs/proxy.hpp"
#include "ecs/random.hpp"
#include "ecs/rational.hpp"
#include "ecs/spreader.hpp"

#endif  // ECS_ECS_HPP
