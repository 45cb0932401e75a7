#pragma once

#include "sigmakflow/errors.hpp"
#include "sigmakflow/symfunc.hpp"
#include "sigmakflow/linalg.hpp"
#include "sigmakflow/fields.hpp"
#include "sigmakflow/geometry.hpp"
#include "sigmakflow/legendre.hpp"
#include "sigmakflow/flow.hpp"
#include "sigmakflow/expander.hpp"
#include "sigmakflow/diagnostics.hpp"
#include "sigmakflow/io.hpp"
#include "sigmakflow/config.hpp"
#include "sigmakflow/experiment.hpp"
