#pragma once

#include "tfqkd/clicks.hpp"
#include "tfqkd/coherence.hpp"
#include "tfqkd/config.hpp"
#include "tfqkd/csv.hpp"
#include "tfqkd/decoy.hpp"
#include "tfqkd/link_model.hpp"
#include "tfqkd/noise_spectra.hpp"
#include "tfqkd/oracle.hpp"
#include "tfqkd/protocol_cal.hpp"
#include "tfqkd/protocol_sns.hpp"
#include "tfqkd/scenario.hpp"
#include "tfqkd/validation.hpp"
