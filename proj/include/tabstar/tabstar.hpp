#ifndef TABSTAR_TABSTAR_HPP
#define TABSTAR_TABSTAR_HPP

#include "tabstar/classify.hpp"
#include "tabstar/error.hpp"
#include "tabstar/fdmine.hpp"
#include "tabstar/grid.hpp"
#include "tabstar/ingest.hpp"
#include "tabstar/pipeline.hpp"
#include "tabstar/profile.hpp"
#include "tabstar/schema.hpp"
#include "tabstar/table.hpp"
#include "tabstar/transform.hpp"
#include "tabstar/value.hpp"

#endif
