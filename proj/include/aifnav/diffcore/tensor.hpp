#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace aifnav {

// Dense row-major float32 tensor. Storage is shared; ops never mutate an
// existing tensor's data except through explicit in-place accessors used by
// the optimizer.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<int> shape)
        : shape_(std::move(shape)),
          data_(std::make_shared<std::vector<float>>(count(shape_), 0.0f)) {}

    Tensor(std::vector<int> shape, std::vector<float> values)
        : shape_(std::move(shape)),
          data_(std::make_shared<std::vector<float>>(std::move(values))) {
        if (static_cast<int64_t>(data_->size()) != count(shape_))
            throw std::invalid_argument("Tensor: data length " + std::to_string(data_->size()) +
                                        " does not match shape " + shape_str(shape_));
    }

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

    static Tensor full(std::vector<int> shape, float v) {
        Tensor t(std::move(shape));
        for (auto& x : *t.data_) x = v;
        return t;
    }

    static Tensor scalar(float v) { return Tensor({1}, {v}); }

    const std::vector<int>& shape() const { return shape_; }
    int dim(int i) const { return shape_.at(static_cast<size_t>(i)); }
    int rank() const { return static_cast<int>(shape_.size()); }

    int64_t size() const { return data_ ? static_cast<int64_t>(data_->size()) : 0; }
    bool defined() const { return static_cast<bool>(data_); }

    float* data() { return data_->data(); }
    const float* data() const { return data_->data(); }

    float operator[](int64_t i) const { return (*data_)[static_cast<size_t>(i)]; }
    float& operator[](int64_t i) { return (*data_)[static_cast<size_t>(i)]; }

    float item() const {
        if (size() != 1) throw std::invalid_argument("Tensor::item on non-scalar of shape " + shape_str(shape_));
        return (*data_)[0];
    }

    Tensor clone() const {
        Tensor t;
        t.shape_ = shape_;
        t.data_ = std::make_shared<std::vector<float>>(*data_);
        return t;
    }

    // Same storage, new shape.
    Tensor reshaped(std::vector<int> shape) const {
        if (count(shape) != size())
            throw std::invalid_argument("reshape: size mismatch " + shape_str(shape_) + " -> " + shape_str(shape));
        Tensor t;
        t.shape_ = std::move(shape);
        t.data_ = data_;
        return t;
    }

    static int64_t count(const std::vector<int>& shape) {
        int64_t n = 1;
        for (int d : shape) {
            if (d <= 0) throw std::invalid_argument("Tensor: non-positive extent in shape " + shape_str(shape));
            n *= d;
        }
        return n;
    }

    static std::string shape_str(const std::vector<int>& s) {
        std::string out = "[";
        for (size_t i = 0; i < s.size(); ++i) {
            if (i) out += ",";
            out += std::to_string(s[i]);
        }
        return out + "]";
    }

private:
    std::vector<int> shape_;
    std::shared_ptr<std::vector<float>> data_;
};

inline bool same_shape(const Tensor& a, const Tensor& b) { return a.shape() == b.shape(); }

}  // namespace aifnav
