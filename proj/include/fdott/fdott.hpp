#pragma once

#include "fdott/barycenter.hpp"
#include "fdott/design.hpp"
#include "fdott/error.hpp"
#include "fdott/inference.hpp"
#include "fdott/io.hpp"
#include "fdott/measures.hpp"
#include "fdott/oracle.hpp"
#include "fdott/ot.hpp"
#include "fdott/parallel.hpp"
#include "fdott/posthoc.hpp"
#include "fdott/random.hpp"
#include "fdott/sim.hpp"
#include "fdott/version.hpp"
