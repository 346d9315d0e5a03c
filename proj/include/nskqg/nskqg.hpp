#pragma once

#include "nskqg/constitutive.hpp"
#include "nskqg/diagnostics.hpp"
#include "nskqg/errors.hpp"
#include "nskqg/nsk.hpp"
#include "nskqg/qg.hpp"
#include "nskqg/random_fields.hpp"
#include "nskqg/spectral.hpp"
#include "nskqg/stepping.hpp"
