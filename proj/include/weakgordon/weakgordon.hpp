#pragma once

#include "weakgordon/error.hpp"
#include "weakgordon/polynomial.hpp"
#include "weakgordon/measure.hpp"
#include "weakgordon/mollify.hpp"
#include "weakgordon/seminorm.hpp"
#include "weakgordon/propagator.hpp"
#include "weakgordon/parallel.hpp"
#include "weakgordon/gordon.hpp"
#include "weakgordon/constructions.hpp"
#include "weakgordon/io.hpp"
#include "weakgordon/cli.hpp"
