#pragma once

#include "batm/bytes.hpp"
#include "batm/chain.hpp"
#include "batm/crypto.hpp"
#include "batm/errors.hpp"
#include "batm/identity.hpp"
#include "batm/ledger.hpp"
#include "batm/params.hpp"
#include "batm/payload.hpp"
#include "batm/scenario.hpp"
#include "batm/sim.hpp"
#include "batm/store.hpp"
#include "batm/trust.hpp"
#include "batm/validate.hpp"
