// Copyright (c) 2026 The pinnbench Authors
// SPDX-License-Identifier: Apache-2.0
//
// Fully connected tanh network on 2 inputs with 1 output, evaluated over any
// scalar ring (f64, Dual, Var, or jets thereof). Parameters live in one flat
// vector, per layer: row-major weights [out][in], then biases [out].

#pragma once

#include <array>
#include <cstdio>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "pinn/jet.hpp"

namespace pinn {

enum class Activation { kTanh };

struct MlpSpec {
  std::vector<int> hidden = {32, 32, 32};
  Activation act = Activation::kTanh;

  static constexpr int kInputs = 2;
  static constexpr int kOutputs = 1;
};

inline std::vector<int> layer_dims(const MlpSpec& spec) {
  std::vector<int> dims;
  dims.push_back(MlpSpec::kInputs);
  for (int w : spec.hidden) dims.push_back(w);
  dims.push_back(MlpSpec::kOutputs);
  return dims;
}

inline std::size_t param_count(const MlpSpec& spec) {
  const auto dims = layer_dims(spec);
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l)
    n += static_cast<std::size_t>(dims[l] + 1) * dims[l + 1];
  return n;
}

// Glorot-uniform weights, zero biases. Draw order is fixed (layers in order,
// weights row-major, biases after), so a seed pins every entry.
inline std::vector<f64> init_params(const MlpSpec& spec, std::uint64_t seed) {
  const auto dims = layer_dims(spec);
  std::vector<f64> theta;
  theta.reserve(param_count(spec));
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int fan_in = dims[l], fan_out = dims[l + 1];
    const f64 limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (int i = 0; i < fan_in * fan_out; ++i)
      theta.push_back(rng.uniform(-limit, limit));
    for (int i = 0; i < fan_out; ++i) theta.push_back(0.0);
  }
  return theta;
}

namespace detail {

// One dense layer over per-component accumulators. In and out may not alias.
template <class S, int TO>
void affine_layer(std::span<const S> theta, std::size_t& off, int n_in, int n_out,
                  const ad::Jet<S, TO>* in, ad::Jet<S, TO>* out) {
  const S* w = theta.data() + off;
  const S* b = theta.data() + off + static_cast<std::size_t>(n_in) * n_out;
  for (int i = 0; i < n_out; ++i) {
    const S* wi = w + static_cast<std::size_t>(i) * n_in;
    S av = b[i];
    S adx = ad::scalar_from<S>(0.0);
    S adxx = ad::scalar_from<S>(0.0);
    S adt = ad::scalar_from<S>(0.0);
    S adtt = ad::scalar_from<S>(0.0);
    int j = 0;
    for (; j + 1 < n_in; j += 2) {
      av = ad::mul_add2(av, wi[j], in[j].v, wi[j + 1], in[j + 1].v);
      adx = ad::mul_add2(adx, wi[j], in[j].dx, wi[j + 1], in[j + 1].dx);
      adxx = ad::mul_add2(adxx, wi[j], in[j].dxx, wi[j + 1], in[j + 1].dxx);
      adt = ad::mul_add2(adt, wi[j], in[j].dt, wi[j + 1], in[j + 1].dt);
      if constexpr (TO == 2)
        adtt = ad::mul_add2(adtt, wi[j], in[j].dtt, wi[j + 1], in[j + 1].dtt);
    }
    for (; j < n_in; ++j) {
      av = ad::mul_add(av, wi[j], in[j].v);
      adx = ad::mul_add(adx, wi[j], in[j].dx);
      adxx = ad::mul_add(adxx, wi[j], in[j].dxx);
      adt = ad::mul_add(adt, wi[j], in[j].dt);
      if constexpr (TO == 2) adtt = ad::mul_add(adtt, wi[j], in[j].dtt);
    }
    out[i].v = av;
    out[i].dx = adx;
    out[i].dxx = adxx;
    out[i].dt = adt;
    if constexpr (TO == 2) out[i].dtt = adtt;
  }
  off += static_cast<std::size_t>(n_in + 1) * n_out;
}

}  // namespace detail

constexpr int kMaxWidth = 256;

// Raw network output as a jet in (x, t). theta entries are the ring scalars,
// so the same code yields values, directional probes, or a taped graph.
template <class S, int TO>
ad::Jet<S, TO> mlp_forward_jets(const MlpSpec& spec, std::span<const S> theta,
                                const ad::Jet<S, TO>& x, const ad::Jet<S, TO>& t) {
  const auto dims = layer_dims(spec);
  // Reused scratch: only the first layer-width entries are ever live.
  static thread_local std::array<ad::Jet<S, TO>, kMaxWidth> buf_a, buf_b;
  buf_a[0] = x;
  buf_a[1] = t;
  ad::Jet<S, TO>* in = buf_a.data();
  ad::Jet<S, TO>* out = buf_b.data();
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    detail::affine_layer<S, TO>(theta, off, dims[l], dims[l + 1], in, out);
    if (l + 2 < dims.size()) {
      for (int i = 0; i < dims[l + 1]; ++i) out[i] = ad::tanh(out[i]);
    }
    std::swap(in, out);
  }
  return in[0];
}

// Plain scalar forward for when no input derivatives are needed.
template <class S>
S mlp_forward(const MlpSpec& spec, std::span<const S> theta, const S& x,
              const S& t) {
  const auto dims = layer_dims(spec);
  static thread_local std::array<S, kMaxWidth> buf_a, buf_b;
  buf_a[0] = x;
  buf_a[1] = t;
  S* in = buf_a.data();
  S* out = buf_b.data();
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int n_in = dims[l], n_out = dims[l + 1];
    const S* w = theta.data() + off;
    const S* b = theta.data() + off + static_cast<std::size_t>(n_in) * n_out;
    for (int i = 0; i < n_out; ++i) {
      const S* wi = w + static_cast<std::size_t>(i) * n_in;
      S acc = b[i];
      for (int j = 0; j < n_in; ++j) acc = ad::mul_add(acc, wi[j], in[j]);
      out[i] = (l + 2 < dims.size()) ? ad::tanh(acc) : acc;
    }
    off += static_cast<std::size_t>(n_in + 1) * n_out;
    std::swap(in, out);
  }
  return in[0];
}

// ---------------------------------------------------------------------------
// Checkpoint format: "PINNCKPT", u32 version, u32 hidden-layer count, u32
// widths, u64 init seed, u64 param count, then the flat little-endian f64
// parameter array. This code assumes a little-endian host.

inline void save_checkpoint(const std::string& path, const MlpSpec& spec,
                            std::uint64_t seed, std::span<const f64> theta) {
  if (theta.size() != param_count(spec))
    throw IoError("checkpoint save: parameter count mismatch for " + path);
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot open checkpoint for writing: " + path);
  const char magic[8] = {'P', 'I', 'N', 'N', 'C', 'K', 'P', 'T'};
  const std::uint32_t version = 1;
  const std::uint32_t n_hidden = static_cast<std::uint32_t>(spec.hidden.size());
  std::fwrite(magic, 1, 8, f);
  std::fwrite(&version, 4, 1, f);
  std::fwrite(&n_hidden, 4, 1, f);
  for (int w : spec.hidden) {
    const std::uint32_t wu = static_cast<std::uint32_t>(w);
    std::fwrite(&wu, 4, 1, f);
  }
  const std::uint64_t n = theta.size();
  std::fwrite(&seed, 8, 1, f);
  std::fwrite(&n, 8, 1, f);
  std::fwrite(theta.data(), 8, theta.size(), f);
  if (std::fclose(f) != 0) throw IoError("short write on checkpoint: " + path);
}

struct Checkpoint {
  MlpSpec spec;
  std::uint64_t seed = 0;
  std::vector<f64> theta;
};

inline Checkpoint load_checkpoint(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw IoError("cannot open checkpoint: " + path);
  auto fail = [&](const std::string& why) {
    std::fclose(f);
    throw IoError("bad checkpoint " + path + ": " + why);
  };
  char magic[8];
  if (std::fread(magic, 1, 8, f) != 8 || std::memcmp(magic, "PINNCKPT", 8) != 0)
    fail("wrong magic");
  std::uint32_t version = 0, n_hidden = 0;
  if (std::fread(&version, 4, 1, f) != 1 || version != 1) fail("wrong version");
  if (std::fread(&n_hidden, 4, 1, f) != 1 || n_hidden > 64) fail("bad layer count");
  Checkpoint ck;
  ck.spec.hidden.clear();  // drop the default widths before loading
  for (std::uint32_t i = 0; i < n_hidden; ++i) {
    std::uint32_t w = 0;
    if (std::fread(&w, 4, 1, f) != 1 || w == 0 || w > kMaxWidth)
      fail("bad layer width");
    ck.spec.hidden.push_back(static_cast<int>(w));
  }
  std::uint64_t n = 0;
  if (std::fread(&ck.seed, 8, 1, f) != 1) fail("truncated header");
  if (std::fread(&n, 8, 1, f) != 1) fail("truncated header");
  if (n != param_count(ck.spec)) fail("parameter count does not match widths");
  ck.theta.resize(n);
  if (std::fread(ck.theta.data(), 8, n, f) != n) fail("truncated parameter array");
  std::fclose(f);
  return ck;
}

}  // namespace pinn
