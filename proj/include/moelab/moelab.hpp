#ifndef MOELAB_MOELAB_HPP
#define MOELAB_MOELAB_HPP

#include "moelab/errors.hpp"
#include "moelab/linalg.hpp"
#include "moelab/random.hpp"
#include "moelab/channel.hpp"
#include "moelab/channel_io.hpp"
#include "moelab/bounds.hpp"
#include "moelab/parallel.hpp"
#include "moelab/moe.hpp"
#include "moelab/stats.hpp"
#include "moelab/mclab.hpp"

#endif  // MOELAB_MOELAB_HPP
