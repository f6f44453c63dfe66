#pragma once

#include <stdexcept>
#include <string>

namespace msieve {

//! Base class of all library errors. The exit code is what the CLI returns.
class error : public std::runtime_error {
public:
    error(const std::string& what, int exit_code)
        : std::runtime_error(what), exit_code_(exit_code) {}
    int exit_code() const noexcept { return exit_code_; }
    virtual const char* kind() const noexcept = 0;

private:
    int exit_code_;
};

class input_error : public error {
public:
    explicit input_error(const std::string& what) : error(what, 2) {}
    const char* kind() const noexcept override { return "input_error"; }
};

class config_error : public error {
public:
    explicit config_error(const std::string& what) : error(what, 2) {}
    const char* kind() const noexcept override { return "config_error"; }
};

class numeric_error : public error {
public:
    explicit numeric_error(const std::string& what, long index = -1)
        : error(what, 3), index_(index) {}
    const char* kind() const noexcept override { return "numeric_error"; }
    //! Offending sample index, or -1 when not tied to one.
    long index() const noexcept { return index_; }

private:
    long index_;
};

class quadrature_error : public error {
public:
    quadrature_error(const std::string& what, double estimate, double err_estimate)
        : error(what, 3), estimate_(estimate), err_estimate_(err_estimate) {}
    const char* kind() const noexcept override { return "quadrature_error"; }
    double estimate() const noexcept { return estimate_; }
    double error_estimate() const noexcept { return err_estimate_; }

private:
    double estimate_;
    double err_estimate_;
};

class fit_error : public error {
public:
    explicit fit_error(const std::string& what) : error(what, 3) {}
    const char* kind() const noexcept override { return "fit_error"; }
};

class selection_error : public error {
public:
    explicit selection_error(const std::string& what) : error(what, 3) {}
    const char* kind() const noexcept override { return "selection_error"; }
};

class calibration_error : public error {
public:
    explicit calibration_error(const std::string& what) : error(what, 3) {}
    const char* kind() const noexcept override { return "calibration_error"; }
};

class risk_error : public error {
public:
    explicit risk_error(const std::string& what) : error(what, 3) {}
    const char* kind() const noexcept override { return "risk_error"; }
};

class construction_error : public error {
public:
    explicit construction_error(const std::string& what) : error(what, 3) {}
    const char* kind() const noexcept override { return "construction_error"; }
};

class sampling_error : public error {
public:
    explicit sampling_error(const std::string& what) : error(what, 3) {}
    const char* kind() const noexcept override { return "sampling_error"; }
};

class discretization_error : public error {
public:
    discretization_error(const std::string& what, double achieved)
        : error(what, 3), achieved_(achieved) {}
    const char* kind() const noexcept override { return "discretization_error"; }
    double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

class audit_failure : public error {
public:
    explicit audit_failure(const std::string& what) : error(what, 4) {}
    const char* kind() const noexcept override { return "audit_failure"; }
};

}  // namespace msieve
