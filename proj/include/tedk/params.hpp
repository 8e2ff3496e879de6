#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "tedk/tensor.hpp"

namespace tedk {

// Named parameters in insertion order. The order is part of the contract:
// optimizer state, checkpoints, and parameter hashes all follow it.
class ParameterSet {
public:
    void add(const std::string& name, Tensor t);
    bool contains(const std::string& name) const { return index_.count(name) != 0; }
    Tensor get(const std::string& name) const;

    std::size_t size() const { return entries_.size(); }
    std::size_t total_values() const;

    const std::string& name_at(std::size_t i) const { return entries_[i].first; }
    Tensor& tensor_at(std::size_t i) { return entries_[i].second; }
    const Tensor& tensor_at(std::size_t i) const { return entries_[i].second; }

    void set_requires_grad(bool rg);
    void zero_grads();

    // Digest over names, shapes, and exact f64 data bytes; changes iff any
    // parameter value changes. Used to verify frozen models stay frozen.
    std::string sha256() const;

private:
    std::vector<std::pair<std::string, Tensor>> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace tedk
