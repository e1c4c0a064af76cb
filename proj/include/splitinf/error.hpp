#pragma once

#include <stdexcept>
#include <string>

namespace splitinf {

// Base for every statistical or runtime failure raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Violated precondition on caller-supplied arguments.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

class SingularMatrixError : public Error {
public:
    SingularMatrixError()
        : Error("projection parameter undefined: singular moment matrix") {}
};

class DegenerateBootstrapError : public Error {
public:
    DegenerateBootstrapError() : Error("degenerate bootstrap sample") {}
};

class ImageBootstrapError : public Error {
public:
    ImageBootstrapError() : Error("image bootstrap cube leaves the PD cone") {}
};

class SampleTooSmallError : public Error {
public:
    SampleTooSmallError()
        : Error("sample too small for median interval at this alpha and k") {}
};

} // namespace splitinf
