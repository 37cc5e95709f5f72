#ifndef LFMIX_LFMIX_HPP
#define LFMIX_LFMIX_HPP

#include "lfmix/core.hpp"
#include "lfmix/schedule.hpp"
#include "lfmix/scenario.hpp"
#include "lfmix/neighborhood.hpp"
#include "lfmix/dynamics.hpp"
#include "lfmix/analysis.hpp"
#include "lfmix/io/csv.hpp"
#include "lfmix/io/scenario_json.hpp"
#include "lfmix/io/report_json.hpp"
#include "lfmix/io/svg.hpp"

#endif
