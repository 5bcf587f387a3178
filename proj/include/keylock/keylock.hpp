#pragma once

#include "attack.hpp"
#include "bench.hpp"
#include "cnf.hpp"
#include "equivalence.hpp"
#include "error.hpp"
#include "keyrb.hpp"
#include "lock.hpp"
#include "manifest.hpp"
#include "netlist.hpp"
#include "preprocess.hpp"
#include "random_circuit.hpp"
#include "sat.hpp"
#include "simulate.hpp"
#include "timing.hpp"
#include "tseitin.hpp"
