#include "afmvc/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace afmvc {

std::uint64_t fnv1a_hash(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

namespace {

void write_values(std::ostream& out, const double* data, Eigen::Index n) {
  char buf[64];
  for (Eigen::Index i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", data[i]);
    out << buf << (i + 1 < n ? ' ' : '\n');
  }
  if (n == 0) out << '\n';
}

void read_values(std::istream& in, double* data, Eigen::Index n) {
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(in >> data[i])) throw std::runtime_error("checkpoint: truncated value block");
  }
}

}  // namespace

void Checkpoint::save(const std::string& path) const {
  require(networks.size() == adam_states.size(), "checkpoint: one Adam state per network");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("checkpoint: cannot write '" + path + "'");
  out << kMagic << " v" << kVersion << "\n";
  out << "config_hash " << config_hash << "\n";
  out << "networks " << networks.size() << "\n";
  for (std::size_t n = 0; n < networks.size(); ++n) {
    const auto& net = networks[n];
    const auto& adam = adam_states[n];
    out << "network " << role_name(net.role) << " layers " << net.layers.size() << "\n";
    char hdr[160];
    std::snprintf(hdr, sizeof(hdr), "adam %ld %.17g %.17g %.17g %.17g", adam.t, adam.lr,
                  adam.beta1, adam.beta2, adam.eps);
    out << hdr << "\n";
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      const auto& layer = net.layers[l];
      out << "layer " << layer.w.cols() << " " << layer.w.rows() << " "
          << activation_name(layer.act) << "\n";
      write_values(out, layer.w.data(), layer.w.size());
      write_values(out, layer.b.data(), layer.b.size());
      write_values(out, adam.m_w[l].data(), adam.m_w[l].size());
      write_values(out, adam.v_w[l].data(), adam.v_w[l].size());
      write_values(out, adam.m_b[l].data(), adam.m_b[l].size());
      write_values(out, adam.v_b[l].data(), adam.v_b[l].size());
    }
  }
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
  std::string magic, version;
  in >> magic >> version;
  if (magic != kMagic || version != "v" + std::to_string(kVersion)) {
    throw std::runtime_error("checkpoint '" + path + "': bad magic/version '" + magic + " " +
                             version + "'");
  }
  Checkpoint ckpt;
  std::string key;
  std::size_t count = 0;
  in >> key >> ckpt.config_hash;
  if (key != "config_hash") throw std::runtime_error("checkpoint: expected config_hash");
  in >> key >> count;
  if (key != "networks") throw std::runtime_error("checkpoint: expected networks");
  for (std::size_t n = 0; n < count; ++n) {
    std::string role_str, layers_key;
    std::size_t layer_count = 0;
    in >> key >> role_str >> layers_key >> layer_count;
    if (key != "network" || layers_key != "layers") {
      throw std::runtime_error("checkpoint: expected network header");
    }
    DenseNetwork net;
    net.role = role_from_name(role_str);
    AdamState adam;
    in >> key >> adam.t >> adam.lr >> adam.beta1 >> adam.beta2 >> adam.eps;
    if (key != "adam") throw std::runtime_error("checkpoint: expected adam header");
    for (std::size_t l = 0; l < layer_count; ++l) {
      Eigen::Index in_dim = 0, out_dim = 0;
      std::string act_str;
      in >> key >> in_dim >> out_dim >> act_str;
      if (key != "layer") throw std::runtime_error("checkpoint: expected layer header");
      Layer layer;
      layer.w.resize(out_dim, in_dim);
      layer.b.resize(out_dim);
      layer.act = activation_from_name(act_str);
      read_values(in, layer.w.data(), layer.w.size());
      read_values(in, layer.b.data(), layer.b.size());
      Matrix mw(out_dim, in_dim), vw(out_dim, in_dim);
      Vector mb(out_dim), vb(out_dim);
      read_values(in, mw.data(), mw.size());
      read_values(in, vw.data(), vw.size());
      read_values(in, mb.data(), mb.size());
      read_values(in, vb.data(), vb.size());
      adam.m_w.push_back(std::move(mw));
      adam.v_w.push_back(std::move(vw));
      adam.m_b.push_back(std::move(mb));
      adam.v_b.push_back(std::move(vb));
      net.layers.push_back(std::move(layer));
    }
    ckpt.networks.push_back(std::move(net));
    ckpt.adam_states.push_back(std::move(adam));
  }
  return ckpt;
}

}  // namespace afmvc
