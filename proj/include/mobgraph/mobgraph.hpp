#ifndef MOBGRAPH_MOBGRAPH_HPP
#define MOBGRAPH_MOBGRAPH_HPP

#include "cliques.hpp"
#include "cluster.hpp"
#include "common.hpp"
#include "embed.hpp"
#include "gexf.hpp"
#include "ingest.hpp"
#include "matrix_io.hpp"
#include "pipeline.hpp"
#include "synth.hpp"
#include "umap.hpp"
#include "wl.hpp"

#endif // MOBGRAPH_MOBGRAPH_HPP
