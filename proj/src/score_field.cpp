#include "scoresmooth/score_field.hpp"

#include <sstream>

#include "scoresmooth/errors.hpp"

namespace scoresmooth {

std::string to_string(ScoreVariant v) {
    switch (v) {
        case ScoreVariant::Empirical: return "esf";
        case ScoreVariant::PiecewiseLinear: return "pl-esf";
        case ScoreVariant::Smoothed: return "smoothed";
        case ScoreVariant::Neural: return "nn";
        case ScoreVariant::Zero: return "zero";
        case ScoreVariant::PointCloud: return "point-cloud-esf";
    }
    return "unknown";
}

void ScoreField::evaluate_batch(const Eigen::MatrixXd& x, double t, Eigen::MatrixXd& out) const {
    if (static_cast<std::size_t>(x.rows()) != dim()) throw DomainError("batch dimension does not match the score field");
    out.resize(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) out.col(j) = evaluate(x.col(j), t);
}

EmpiricalScoreField::EmpiricalScoreField(TrainingSet ts, std::optional<double> clip_factor)
    : ts_(std::move(ts)), clip_factor_(clip_factor) {
    if (clip_factor_ && !(*clip_factor_ > 0.0)) throw ParameterError("clip factor must be positive");
}

std::string EmpiricalScoreField::descriptor() const {
    std::ostringstream os;
    os << "esf";
    if (clip_factor_) os << "(clip=" << *clip_factor_ << "/t)";
    return os.str();
}

Eigen::VectorXd EmpiricalScoreField::evaluate(const Eigen::VectorXd& x, double t) const {
    Eigen::VectorXd s = esf_multi(x, t, ts_);
    if (clip_factor_) s = clip_score(s, *clip_factor_ / t);
    return s;
}

void EmpiricalScoreField::evaluate_batch(const Eigen::MatrixXd& x, double t, Eigen::MatrixXd& out) const {
    if (static_cast<std::size_t>(x.rows()) != dim()) throw DomainError("batch dimension does not match the score field");
    if (!x.allFinite()) throw DomainError("evaluation point is not finite");
    out = -x / t;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        out(0, j) = esf_1d(x(0, j), t, ts_);
        if (clip_factor_) {
            const double norm = out.col(j).norm(), cap = *clip_factor_ / t;
            if (norm > cap) out.col(j) *= cap / norm;
        }
    }
}

Eigen::VectorXd PiecewiseLinearScoreField::evaluate(const Eigen::VectorXd& x, double t) const {
    if (static_cast<std::size_t>(x.size()) != ts_.ambient_dim()) throw DomainError("dimension mismatch");
    Eigen::VectorXd s = -x / t;
    s(0) = pl_esf(x(0), t, ts_);
    return s;
}

std::string SmoothedScoreField::descriptor() const {
    std::ostringstream os;
    os << "smoothed(kappa=" << sp_.kappa << ")";
    return os.str();
}

Eigen::VectorXd SmoothedScoreField::evaluate(const Eigen::VectorXd& x, double t) const {
    return smoothed_multi(x, t, sp_, ts_);
}

void SmoothedScoreField::evaluate_batch(const Eigen::MatrixXd& x, double t, Eigen::MatrixXd& out) const {
    if (static_cast<std::size_t>(x.rows()) != dim()) throw DomainError("batch dimension does not match the score field");
    if (!x.allFinite()) throw DomainError("evaluation point is not finite");
    sp_.check_valid(t, ts_);
    const double delta = sp_.delta_of(t);
    out = -x / t;
    for (Eigen::Index j = 0; j < x.cols(); ++j) out(0, j) = smoothed_pl_esf(x(0, j), t, delta, ts_);
}

Eigen::VectorXd ZeroScoreField::evaluate(const Eigen::VectorXd& x, double) const {
    if (static_cast<std::size_t>(x.size()) != dim_) throw DomainError("dimension mismatch");
    return Eigen::VectorXd::Zero(x.size());
}

PointCloudScoreField::PointCloudScoreField(Eigen::MatrixXd anchors, std::optional<double> clip_factor)
    : anchors_(std::move(anchors)), clip_factor_(clip_factor) {
    if (anchors_.cols() < 1 || anchors_.rows() < 1) throw ParameterError("point cloud needs at least one anchor");
}

std::string PointCloudScoreField::descriptor() const {
    std::ostringstream os;
    os << "point-cloud-esf(n=" << anchors_.cols() << ")";
    return os.str();
}

Eigen::VectorXd PointCloudScoreField::evaluate(const Eigen::VectorXd& x, double t) const {
    Eigen::VectorXd s = empirical_score(x, t, anchors_);
    if (clip_factor_) s = clip_score(s, *clip_factor_ / t);
    return s;
}

}  // namespace scoresmooth
