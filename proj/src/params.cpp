#include "tedk/params.hpp"

#include <cstring>
#include <stdexcept>

#include "tedk/util.hpp"

namespace tedk {

void ParameterSet::add(const std::string& name, Tensor t) {
    if (!t.defined()) throw std::invalid_argument("add: undefined tensor for " + name);
    if (!index_.emplace(name, entries_.size()).second) {
        throw std::invalid_argument("duplicate parameter name: " + name);
    }
    entries_.emplace_back(name, std::move(t));
}

Tensor ParameterSet::get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("no parameter named " + name);
    return entries_[it->second].second;
}

std::size_t ParameterSet::total_values() const {
    std::size_t n = 0;
    for (const auto& [name, t] : entries_) n += t.numel();
    return n;
}

void ParameterSet::set_requires_grad(bool rg) {
    for (auto& [name, t] : entries_) t.set_requires_grad(rg);
}

void ParameterSet::zero_grads() {
    for (auto& [name, t] : entries_) {
        auto& g = t.grad();
        std::fill(g.begin(), g.end(), 0.0);
    }
}

std::string ParameterSet::sha256() const {
    std::string buf;
    for (const auto& [name, t] : entries_) {
        buf += name;
        buf += ':';
        buf += shape_str(t.shape());
        buf += ':';
        std::size_t off = buf.size();
        buf.resize(off + t.numel() * sizeof(double));
        std::memcpy(buf.data() + off, t.data().data(), t.numel() * sizeof(double));
        buf += '\n';
    }
    return sha256_hex(buf);
}

}  // namespace tedk
