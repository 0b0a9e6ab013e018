#include "safelqr/systems.hpp"

namespace safelqr {

LinearPlant demo_plant() {
    Eigen::MatrixXd A(2, 2);
    A << 0.8, 1.0, 0.0, 0.8;
    Eigen::MatrixXd B(2, 1);
    B << 0.0, 1.0;
    return LinearPlant(A, B, Eigen::MatrixXd::Identity(2, 2));
}

LQWeights demo_weights() {
    Eigen::MatrixXd R(1, 1);
    R << 1e-4;
    return LQWeights(Eigen::MatrixXd::Identity(2, 2), R);
}

LinearPlant standin_plant() {
    Eigen::MatrixXd A(8, 8);
    A << 0.135775, -0.407337, -0.040965, -0.306241, -0.120609, -0.117336, -0.332669, -0.182875,
        -0.079956, 0.791658, 0.181261, -0.534976, -0.075460, 0.606523, -0.088936, -0.331072,
        0.279792, 0.240859, 0.307024, -0.024604, 0.196696, 0.029709, 0.254117, -0.305601,
        0.324253, 0.135199, 0.081988, -0.064196, 0.050889, 0.279325, 0.034625, -0.185171,
        0.172196, -0.030525, 0.387395, -0.091203, -0.389838, -0.096343, 0.189556, -0.022120,
        0.227755, -0.106858, 0.204786, -0.124148, 0.248583, -0.028624, 0.681463, -0.124271,
        0.567327, -0.533610, -0.101662, 0.005439, -0.236162, 0.276185, 0.261828, 0.555302,
        0.496674, 0.076300, -0.465812, -0.227395, -0.431281, 0.023093, -0.021697, -0.093460;
    Eigen::MatrixXd B(8, 4);
    B << -1.088783, 1.381120, 0.087343, -2.177544,
        -0.417180, -1.122358, 0.242429, -0.394246,
        0.213562, 2.189011, 0.504427, 0.178999,
        0.601633, -0.127314, -0.162133, -0.904553,
        -1.102798, 1.236159, -0.893615, -0.488332,
        -0.732660, 0.299456, -0.204737, -0.420012,
        -0.505300, -2.505432, -1.766428, 0.986392,
        0.498623, -0.449715, 1.621538, 1.400327;
    return LinearPlant(A, B, Eigen::MatrixXd::Identity(8, 8));
}

LQWeights standin_weights() {
    return LQWeights(Eigen::MatrixXd::Identity(8, 8), Eigen::MatrixXd::Identity(4, 4));
}

}  // namespace safelqr
