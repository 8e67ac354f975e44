#pragma once

// Benchmark fixture shared by the tests: a planar double integrator with box
// constraints, plus previously published reference results for it that the
// toolkit is expected to reproduce (terminal cost, terminal-set rows, input
// trace, and prediction snapshots). Values are frozen verbatim.

#include <vector>

#include "mpckit/polytope.hpp"
#include "mpckit/riccati.hpp"
#include "mpckit/system.hpp"

namespace fixture {

using mpckit::Matrix;
using mpckit::Vector;

inline mpckit::DiscreteLtiSystem plant() {
  Matrix a(2, 2), b(2, 1);
  a << 1.0, 0.05, 0.0, 1.0;
  b << 0.0, 0.05;
  return {a, b};
}

inline mpckit::CostWeights weights() {
  return {Matrix::Identity(2, 2), Matrix::Identity(1, 1)};
}

inline mpckit::HPolyhedron state_box() { return mpckit::HPolyhedron::box(Vector::Constant(2, 10.0)); }
inline mpckit::HPolyhedron input_box() { return mpckit::HPolyhedron::box(Vector::Constant(1, 20.0)); }

// Published terminal cost, rounded to one decimal in the source.
inline Matrix published_terminal_cost() {
  Matrix qf(2, 2);
  qf << 35.7, 20.9, 20.9, 36.2;
  return qf;
}

// Published terminal-set rows (normals to three decimals, offsets to one);
// the printed table lists one half of the symmetric set plus its first
// mirrored row.
inline Matrix published_terminal_set_normals() {
  Matrix f(11, 2);
  f << -0.999, -0.050,
        0.999,  0.050,
        0.995,  0.100,
        0.989,  0.148,
        0.981,  0.196,
        0.970,  0.243,
        0.958,  0.287,
        0.944,  0.330,
        0.928,  0.371,
        0.912,  0.410,
        0.894,  0.447;
  return f;
}

inline Vector published_terminal_set_offsets() {
  Vector g(11);
  g << 10.0, 10.0, 10.0, 10.0, 10.1, 10.2, 10.3, 10.4, 10.6, 10.8, 11.0;
  return g;
}

// Start of the published trajectory; back-solved from the trajectory data.
// The rounded (7.3, 10) start quoted alongside it sits just outside the
// terminal-feasible region and is used for the loss-of-feasibility run.
inline Vector figure_start() { return Vector{{7.24, 10.0}}; }
inline Vector stated_start() { return Vector{{7.3, 10.0}}; }

// Closed-loop states of the short-horizon run from figure_start; the state
// at step 5 is the one whose optimization no longer has a solution.
inline Matrix published_loss_states() {
  Matrix x(6, 2);
  x << 7.24, 10.0,
       7.74, 9.0,
       8.19, 8.0,
       8.59, 7.0,
       8.94, 6.0,
       9.24, 5.05405510543854;
  return x;
}

// Predicted state sequences (excluding the current state) published for
// steps 3 and 4 of the same run.
inline Matrix published_prediction_step3() {
  Matrix p(5, 2);
  p << 8.94, 6.0,
       9.24, 5.05982732082783,
       9.49299136604139, 4.18553642952278,
       9.70226818751753, 3.37375497493583,
       9.87095593626432, 2.62124071990706;
  return p;
}

inline Matrix published_prediction_step4() {
  Matrix p(5, 2);
  p << 9.24, 5.05405510543854,
       9.49270275527193, 4.17573285194874,
       9.70148939786936, 3.36165084605247,
       9.86957194017199, 2.60856119656027,
       10.0, 1.91334748285587;
  return p;
}

// The 100 published closed-loop inputs of the terminal-set run.
inline std::vector<double> published_input_trace() {
  return {
      -20, -20, -20, -20, -20, -20, -20, -20, -20,
      -15.9999999999997,
      -9.90806239600818,  -9.07196028684224,  -8.28350115300344,  -7.5406202215154,
      -6.84131489302544,  -6.18364437831197,  -5.56572921696976,  -4.98575068919965,
      -4.44195013097881,  -3.93262816226648,  -3.45614383730732,  -3.0109137255294,
      -2.59541093099473,  -2.20816405784766,  -1.84775612871769,  -1.51282346256898,
      -1.20205451804738,  -0.914188707956115, -0.648015190093789, -0.402371639310139,
      -0.17614300527766,   0.0317397398620217, 0.222300860138826,  0.396521117147148,
       0.555339030942828,  0.699652137466701,  0.830318239772471,  0.948156650577445,
       1.05394942388117,   1.14844257361039,   1.23234727744899,   1.30634106420006,
       1.37106898320349,   1.42714475449814,   1.47515189857245,   1.51564484469211,
       1.54915001692854,   1.57616689713818,   1.5971690642598,    1.61260520940633,
       1.62290012632913,   1.62845567692644,   1.62965173155487,   1.62684708398316,
       1.6203803409012,    1.61057078596586,   1.59771921842722,   1.58210876643644,
       1.56400567518846,   1.54366007010025,   1.52130669526874,   1.49716562749106,
       1.47144296616511,   1.44433149941976,   1.41601134685179,   1.38665057927156,
       1.35640581588098,   1.3254227993263,    1.29383694908453,   1.26177389365594,
       1.22934998204694,   1.19667277503661,   1.16384151672817,   1.13094758689174,
       1.09807493460915,   1.06530049373367,   1.03269458067878,   1.0003212750494,
       0.968238783627897,  0.936499788224187,  0.905151777895834,  0.87423736603941,
       0.843794592849056,  0.813857213632043,  0.784454973464367,  0.755613868662065,
       0.727356395536,     0.69970178688955,   0.672666236709817,  0.646263113493904,
       0.620503162642341,  0.595394698342115,  0.570943785351818,  0.547154411091457,
       0.524028648429204,  0.501566809547157,  0.479767591257812,  0.458628212132586,
       0.438144541793362,  0.418311222707663};
}

}  // namespace fixture
