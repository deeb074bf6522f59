#pragma once

#include <array>
#include <string>
#include <string_view>

#include "itd/io.hpp"

namespace itd {

// The six mixtures shipped with the library, identical to data/gmm/*.json.
struct BundledGmm {
    std::string_view id;
    std::string_view text;
};

inline constexpr std::array<BundledGmm, 6> bundled_gmms{{
    {"dim2_c10", R"json({
  "id": "dim2_c10",
  "dim": 2,
  "particles_per_center": 200,
  "selected": 100,
  "means": [
    [1.79229996, 3.03739036],
    [-1.19058867, -4.34063653],
    [-2.11854401, 4.09593528],
    [-2.86614646, -0.47876038],
    [4.3120602, -4.75100772],
    [1.00548917, 4.501295],
    [-2.69697121, 0.48489919],
    [4.09128375, -3.66830554],
    [0.23412581, 2.50409859],
    [1.69013241, -0.3224714]
  ],
  "covariances": [
    [[2.59847307, 0.25010595], [0.25010595, 0.60533531]],
    [[2.53216876, -0.14189311], [-0.14189311, 0.3939682]],
    [[2.5064178, 0.23770523], [0.23770523, 0.49430945]],
    [[1.91557475, 0.98748], [0.98748, 1.24310123]],
    [[1.75850071, -0.95310038], [-0.95310038, 0.93108462]],
    [[2.21886025, -0.58325887], [-0.58325887, 0.46024507]],
    [[1.35681743, -1.09247798], [-1.09247798, 1.61345614]],
    [[2.20271214, 0.32602845], [0.32602845, 0.29813593]],
    [[2.5345792, 0.3575912], [0.3575912, 0.63866598]],
    [[1.7025472, -0.87512782], [-0.87512782, 0.69863228]]
  ],
  "weights": [0.01564952, 0.15994791, 0.08991018, 0.14837025, 0.2005688,
              0.11043623, 0.10277117, 0.01477645, 0.05505221, 0.10251729]
}
)json"},
    {"dim2_c16", R"json({
  "id": "dim2_c16",
  "dim": 2,
  "particles_per_center": 160,
  "selected": 128,
  "means": [
    [9, 6], [9, -5], [5, 5], [-10, 8],
    [-7, 7], [9, 9], [9, 4], [-3, -10],
    [-9, -1], [-10, 0], [-7, 1], [8, -8],
    [-10, -10], [-6, -5], [-4, -2], [7, 5]
  ],
  "covariances": [
    [[2.49118778, -0.52372617], [-0.52372617, 0.57790164]],
    [[2.7960884, 0.07202756], [0.07202756, 0.7859871]],
    [[1.84191462, -0.85412423], [-0.85412423, 0.7311887]],
    [[2.47150611, -0.19202043], [-0.19202043, 0.36136642]],
    [[2.57147619, -0.16840333], [-0.16840333, 0.5958216]],
    [[2.36451515, 0.25765723], [0.25765723, 0.34956037]],
    [[2.70927746, 0.1068342], [0.1068342, 0.62088381]],
    [[2.70676862, 0.3036051], [0.3036051, 0.80040108]],
    [[2.8751296, 0.01771981], [0.01771981, 0.86839542]],
    [[1.66592325, 0.95932126], [0.95932126, 1.09707757]],
    [[2.00518301, 0.44538624], [0.44538624, 0.20326645]],
    [[2.42869787, 0.45667907], [0.45667907, 0.60163072]],
    [[2.46641227, 0.25352207], [0.25352207, 0.5117985]],
    [[2.41577764, -0.39180762], [-0.39180762, 0.55948601]],
    [[2.51260059, 0.54101916], [0.54101916, 0.76445211]],
    [[2.36191609, -0.34632195], [-0.34632195, 0.4390211]]
  ],
  "weights": [0.06011042, 0.07833323, 0.06601944, 0.05967994, 0.04640204,
              0.07074346, 0.04792803, 0.09767407, 0.10554801, 0.04199756,
              0.08671602, 0.05792878, 0.06221676, 0.10137871, 0.00778043, 0.00954309]
}
)json"},
    {"dim2_c5", R"json({
  "id": "dim2_c5",
  "dim": 2,
  "particles_per_center": 400,
  "selected": 100,
  "means": [
    [0.31266704, 0.27504179],
    [0.15120579, -0.92187417],
    [-0.28437279, 0.89136637],
    [-0.87991064, 0.72808421],
    [0.75458105, -0.89761267]
  ],
  "covariances": [
    [[2.27171261, -0.19234173], [-0.19234173, 0.30900127]],
    [[2.72538843, -0.18819093], [-0.18819093, 0.76035309]],
    [[2.28960495, -0.00992103], [-0.00992103, 0.26865532]],
    [[1.52649829, 1.0452592], [1.0452592, 1.74912699]],
    [[2.41616602, 0.48373093], [0.48373093, 0.51568926]]
  ],
  "weights": [0.15743525, 0.28348483, 0.10232679, 0.03627818, 0.42047495]
}
)json"},
    {"dim3_c3", R"json({
  "id": "dim3_c3",
  "dim": 3,
  "particles_per_center": 500,
  "selected": 375,
  "means": [
    [0.10827605, 3.92946954, 3.96293089],
    [-3.7441469, -2.92757122, -4.48532797],
    [-0.59190156, -4.70123789, -0.43166776]
  ],
  "covariances": [
    [[1.68353569, 1.50050598, 0.0679262],
     [1.50050598, 2.16517974, -0.15853728],
     [0.0679262, -0.15853728, 0.44174394]],
    [[1.44858553, -1.2905356, -0.80287245],
     [-1.2905356, 2.04023659, 0.78596847],
     [-0.80287245, 0.78596847, 1.23990577]],
    [[0.54892866, -0.2603193, -0.0255528],
     [-0.2603193, 3.106415, 0.92873064],
     [-0.02555282, 0.92873064, 0.63110853]]
  ],
  "weights": [0.35538777, 0.45691364, 0.18769858]
}
)json"},
    {"dim3_c5", R"json({
  "id": "dim3_c5",
  "dim": 3,
  "particles_per_center": 400,
  "selected": 500,
  "means": [
    [1.56333522, 1.37520896, 0.75602894],
    [-4.60937084, -1.42186396, 4.45683187],
    [-4.3995532, 3.64042104, 3.77290526],
    [-4.48806334, 1.52418615, 0.51751369],
    [0.97513253, -0.16471376, -2.17011839]
  ],
  "covariances": [
    [[0.6244727, -0.7239226, -0.4573932],
     [-0.7239226, 1.85830256, 1.37237297],
     [-0.4573932, 1.37237297, 1.83967989]],
    [[1.52528618, 1.13821566, -0.96273147],
     [1.13821566, 2.07065186, -0.85116858],
     [-0.96273147, -0.85116858, 1.24867171]],
    [[1.83612253, 1.4455393, -0.62284455],
     [1.4455393, 2.04441818, -0.51266313],
     [-0.62284455, -0.51266313, 0.95234161]],
    [[0.72600504, -0.6691261, -0.66730684],
     [-0.6691261, 2.12310268, 1.28413393],
     [-0.66730684, 1.28413393, 1.60606812]],
    [[0.20310482, -0.36713897, 0.03372048],
     [-0.36713897, 2.862603, -0.76036188],
     [0.03372048, -0.76036188, 0.26176859]]
  ],
  "weights": [0.15743525, 0.28348483, 0.10232679, 0.03627818, 0.42047495]
}
)json"},
    {"dim5_c3", R"json({
  "id": "dim5_c3",
  "dim": 5,
  "particles_per_center": 800,
  "selected": 600,
  "means": [
    [0.10827605, 3.92946954, 3.96293089, -3.7441469, -2.92757122],
    [-4.48532797, -0.59190156, -4.70123789, -0.43166776, 1.49144048],
    [-2.21512717, 1.76254902, 0.90862817, -4.76018118, 0.58854088]
  ],
  "covariances": [
    [[0.6141946, -0.0185777, 0.1488841, -0.0632101, -0.2064803],
     [-0.0185777, 1.4940510, 1.4099103, 0.8157628, -1.1855394],
     [0.1488841, 1.4099103, 2.2648389, 1.0221659, -1.7608476],
     [-0.0632101, 0.8157628, 1.0221659, 1.1607710, -0.9997849],
     [-0.2064803, -1.1855394, -1.7608476, -0.9997849, 1.9458983]],
    [[1.7200913, 1.3976971, 1.1416574, 0.0387295, -1.5148418],
     [1.3976971, 1.612375, 0.969004, -0.025671, -1.441501],
     [1.1416574, 0.9690040, 1.1830867, -0.1298122, -1.0327085],
     [0.0387295, -0.0256711, -0.1298122, 0.7039679, 0.0605373],
     [-1.5148418, -1.441501, -1.0327085, 0.0605373, 1.9484404]],
    [[0.5592179, -0.1198072, -0.1764103, 0.5732007, 0.1635879],
     [-0.1198072, 1.3423229, 0.3395780, -1.7867579, -0.3338649],
     [-0.1764103, 0.3395780, 0.8870684, -0.6177889, 0.0123156],
     [0.5732007, -1.7867579, -0.6177889, 4.258851, 1.1801519],
     [0.1635879, -0.3338649, 0.0123156, 1.1801519, 0.8692625]]
  ],
  "weights": [0.35538777, 0.45691364, 0.18769858]
}
)json"},
}};

inline GmmConfig bundled_gmm(std::string_view id) {
    for (const auto& b : bundled_gmms)
        if (b.id == id) return io::gmm_from_json(io::parse(std::string(b.text)));
    throw InvalidArgument("no bundled mixture named '" + std::string(id) + "'");
}

} // namespace itd
