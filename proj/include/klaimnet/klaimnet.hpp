#pragma once

// Umbrella header: the whole workbench.

#include "core.hpp"
#include "match.hpp"
#include "parser.hpp"
#include "engine.hpp"
#include "explorer.hpp"
#include "simulator.hpp"
#include "services.hpp"
#include "printer.hpp"
