#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace curate {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An error carrying a module-specific kind and the subject it concerns
/// (a field, column, attribute or entity id).
template <class KindT>
class KindedError : public Error {
public:
    using Kind = KindT;

    KindedError(Kind kind, std::string subject, const std::string& message)
        : Error(message), kind_(kind), subject_(std::move(subject)) {}

    Kind kind() const noexcept { return kind_; }
    const std::string& subject() const noexcept { return subject_; }

private:
    Kind kind_;
    std::string subject_;
};

}  // namespace curate
