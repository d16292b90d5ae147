#ifndef TICKSIM_TICKSIM_HPP
#define TICKSIM_TICKSIM_HPP

#include "ticksim/linalg.hpp"
#include "ticksim/clock.hpp"
#include "ticksim/evolve.hpp"
#include "ticksim/tickstats.hpp"
#include "ticksim/axioms.hpp"
#include "ticksim/io.hpp"

#endif  // TICKSIM_TICKSIM_HPP
