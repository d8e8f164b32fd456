#pragma once

// Umbrella header for the whole toolkit. The HTTP pieces live in
// entromon/http.hpp and entromon/client_factory.hpp, which are not pulled
// in here to keep socket headers out of translation units that only do
// math.

#include "entromon/clients.hpp"
#include "entromon/config.hpp"
#include "entromon/dynamics.hpp"
#include "entromon/errors.hpp"
#include "entromon/estimation.hpp"
#include "entromon/monitor.hpp"
#include "entromon/persistence.hpp"
#include "entromon/random.hpp"
#include "entromon/simulator.hpp"
#include "entromon/stats.hpp"
#include "entromon/taxonomy.hpp"
