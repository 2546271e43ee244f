#pragma once

// Desk-scale Bayesian fully-connected network trained by variational
// inference: loss = beta * sum_layers KL(q||p) - S1, with the KL assembled
// per weight coordinate through parameterization tuples (graph size
// independent of the KL sample count) and S1 the per-datapoint
// single-sample likelihood mean, optionally reparameterized on the last
// layer.
//
// Posterior families per layer: Gaussian (independent eps per weight) or
// Radial (one direction vector + one radius per layer per draw, weights
// w_c = mu_c + sigma_c * (xi_c/||xi||)*|r|). sigma = ln(1 + e^rho) keeps
// scales positive with rho unconstrained.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mcrepar/kl.hpp"
#include "mcrepar/tape.hpp"

namespace mcrepar {

enum class PosteriorKind { Gaussian, Radial };
enum class Task { Classification, Regression };
enum class SampleMode { PerBatch, PerDatapoint };
enum class LikTask { Regression, ClassificationTaylor };
enum class ConfidenceStat { VoteFraction, MeanProb };

double softplus(double rho);
double softplus_inv(double sigma);

struct BayesDense {
    int in_dim{0};
    int out_dim{0};
    std::vector<double> mu_w, mu_b;    // out x in row-major; out
    std::vector<double> rho_w, rho_b;  // sigma = softplus(rho)
    PosteriorKind posterior{PosteriorKind::Gaussian};
    std::string prior{"normal"};
    std::vector<double> prior_params{0.0, 1.0};

    std::size_t weight_count() const {
        return static_cast<std::size_t>(out_dim) *
                   static_cast<std::size_t>(in_dim) +
               static_cast<std::size_t>(out_dim);
    }
};

struct BnnModel {
    std::vector<BayesDense> layers;
    std::size_t param_count() const;           // mu and rho entries combined
    std::vector<double> flat_params() const;   // canonical order (see below)
    void set_flat_params(std::span<const double> p);
};

// mu from U(-1/sqrt(in), 1/sqrt(in)); rho set so sigma = 0.05/sqrt(in).
// dims = {in, hidden..., out}.
BnnModel init_model(std::span<const int> dims, PosteriorKind posterior,
                    const std::string& prior,
                    std::span<const double> prior_params, std::uint64_t seed);

// --- single-layer sampled affine map (no activation) -------------------------

// PerBatch draws one weight realization for all rows; PerDatapoint draws
// independently per row. input is rows x in_dim flat, output rows x out_dim.
std::vector<double> forward_sample(const BayesDense& layer,
                                   std::span<const double> input,
                                   std::size_t rows, SampleMode mode,
                                   std::uint64_t seed);

// --- likelihood nodes ---------------------------------------------------------

// Gaussian log density with fixed observation scale: -(y-u)^2/(2 s^2) - ln s
// - (1/2) ln(2 pi).
Val log_lik_regression(Tape& tape, Val u, double y, double sigma_hat);
// Bernoulli log likelihood -ln(1+e^(-u)) - (1-y) u.
Val log_lik_classification(Tape& tape, Val u, int y);
// Quadratic stand-in -ln 2 + u/2 - u^2/4 - (1-y) u (the expansion the
// last-layer route needs; its u^2 coefficient is the displayed -1/4).
Val log_lik_classification_taylor2(Tape& tape, Val u, int y);

// --- last-layer likelihood reparameterization ---------------------------------

// Treats each datapoint's pre-activation u_b = act_b . w + b as a
// location-scale variable in the last layer's weights and routes the
// (quadratic) log likelihood through a polynomial tuple, averaging m weight
// draws at a graph size independent of m. Single output unit only.
// Per-datapoint draw streams are mix_seed(seed, b); at m = 1 the value
// coincides with the per-datapoint single-sample estimate built from the
// same stream.
Val last_layer_lik_repar(Tape& tape, std::span<const Val> act,
                         std::size_t rows, std::size_t width,
                         std::span<const Val> mu_w, Val mu_b,
                         std::span<const Val> sigma_w, Val sigma_b,
                         std::span<const double> y, LikTask task,
                         double sigma_hat, std::size_t m, std::uint64_t seed);

// --- ELBO step ----------------------------------------------------------------

struct ElboConfig {
    double beta{-1.0};  // < 0: resolved by train() to 1/n_minibatches
    std::size_t m_kl{1};
    std::size_t m_lik{1};
    std::size_t batch_size{32};
    KlMethod::Tag kl_method{KlMethod::Tag::ReparMC};
    Task task{Task::Classification};
    bool last_layer_repar{false};  // classification goes through taylor2
    std::size_t m_last_layer{100};
    double sigma_hat{1.0};  // regression observation scale
};

// Per-step parameter handles in canonical flat order: for each layer,
// mu_w, mu_b, rho_w, rho_b.
struct LayerHandles {
    std::vector<Val> mu_w, mu_b, rho_w, rho_b;
    std::vector<Val> sigma_w, sigma_b;  // softplus nodes
};
struct ParamHandles {
    std::vector<Val> flat;
    std::vector<LayerHandles> layers;
};
ParamHandles build_params(Tape& tape, const BnnModel& model);

// One layer's KL(q||p) summed over weight coordinates, as a tape node.
// ReparMC routes each coordinate through location-scale power tuples (graph
// size independent of m); DirectMC builds per-draw subgraphs. The eps matrix
// (m x weight_count, flat coordinate order w then b) is drawn from
// mix_seed(seed, 0xb17): Gaussian rows are iid normals, Radial rows share
// one direction + radius per draw.
Val layer_kl(Tape& tape, const BayesDense& layer, const LayerHandles& h,
             KlMethod::Tag method, std::size_t m, std::uint64_t seed);

struct ElboBuild {
    Val loss{};
    double loss_value{0.0};
    double kl_value{0.0};  // sum over layers, unweighted
    double s1_value{0.0};  // batch-mean log likelihood
};
// loss = beta * kl - s1. beta must be resolved (>= 0) here.
ElboBuild elbo(Tape& tape, const BnnModel& model, const ParamHandles& h,
               std::span<const double> x, std::span<const double> y,
               std::size_t rows, const ElboConfig& cfg, double beta,
               std::uint64_t seed);

// --- training -----------------------------------------------------------------

struct OptimConfig {
    double lr{1e-3};
    double beta1{0.9};
    double beta2{0.999};
    double eps{1e-8};
};

struct TrainData {
    std::vector<double> x;  // n x dim flat
    std::vector<double> y;  // labels (0/1) or targets
    std::size_t n{0};
    std::size_t dim{0};
};

// Two interleaved half-moons (binary labels) and a 1-D sinusoid.
TrainData make_two_moons(std::size_t n, double noise, std::uint64_t seed);
TrainData make_sinusoid(std::size_t n, double noise, std::uint64_t seed);

struct EpochRecord {
    double elbo{0.0};      // mean step loss
    double nll{0.0};       // mean step -S1
    double kl{0.0};        // mean step KL sum
    double accuracy{0.0};  // mu-map validation accuracy (classification)
};

struct TrainReport {
    std::uint64_t seed{0};
    double wall_time_sec{0.0};
    std::vector<EpochRecord> epochs;
    // validation confident sets from predict_with_confidence
    double overall_accuracy{0.0};
    std::vector<double> thresholds;
    std::vector<std::size_t> confident_size;
    std::vector<double> confident_accuracy;  // NaN where the set is empty
};

struct TrainOptions {
    int epochs{100};
    OptimConfig optim;
    ElboConfig elbo;
    std::size_t n_predictive{64};
    std::vector<double> thresholds{0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
};

// Deterministic given seed. Throws DivergenceError (with epoch and batch
// index) if the loss leaves the finite range.
TrainReport train(BnnModel& model, const TrainData& train_set,
                  const TrainData& val_set, const TrainOptions& opts,
                  std::uint64_t seed);

// --- prediction ---------------------------------------------------------------

// Majority vote over n_samples weight realizations; confidence is the vote
// fraction of the winning label (or the mean sigmoid probability with
// ConfidenceStat::MeanProb). Ties resolve to the lower class index.
// Per-input streams are mix_seed(seed, row).
struct Prediction {
    std::vector<int> label;
    std::vector<double> confidence;
};
Prediction predict_with_confidence(
    const BnnModel& model, std::span<const double> x, std::size_t rows,
    std::size_t n_samples, std::uint64_t seed,
    ConfidenceStat stat = ConfidenceStat::VoteFraction);

// mu-map (sigma -> 0) forward pass through the whole net, ReLU between
// layers, none after the last.
std::vector<double> forward_mean(const BnnModel& model,
                                 std::span<const double> x, std::size_t rows);

// --- checkpoint ---------------------------------------------------------------

// Text container, hexfloat payload, lossless round trip. Layout documented
// in the writer.
void save_model(const BnnModel& model, const std::string& path);
BnnModel load_model(const std::string& path);

}  // namespace mcrepar
