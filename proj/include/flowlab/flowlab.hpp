#ifndef FLOWLAB_FLOWLAB_HPP
#define FLOWLAB_FLOWLAB_HPP

#include "flowlab/errors.hpp"
#include "flowlab/records.hpp"
#include "flowlab/cleaning.hpp"
#include "flowlab/merge.hpp"
#include "flowlab/histogram.hpp"
#include "flowlab/distributions.hpp"
#include "flowlab/mixture.hpp"
#include "flowlab/fit.hpp"
#include "flowlab/generator.hpp"

#endif // FLOWLAB_FLOWLAB_HPP
