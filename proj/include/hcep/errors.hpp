// Copyright 2026 The HCEP Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HCEP_ERRORS_HPP_
#define HCEP_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace hcep {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define HCEP_DEFINE_ERROR(Name, Base)      \
  class Name : public Base {               \
   public:                                 \
    using Base::Base;                      \
  }

// Hierarchy construction and lookup.
HCEP_DEFINE_ERROR(HierarchyError, Error);
HCEP_DEFINE_ERROR(CycleError, HierarchyError);
HCEP_DEFINE_ERROR(OrphanError, HierarchyError);
HCEP_DEFINE_ERROR(LevelError, HierarchyError);
HCEP_DEFINE_ERROR(DuplicateIdError, HierarchyError);
HCEP_DEFINE_ERROR(DuplicateNameError, HierarchyError);
HCEP_DEFINE_ERROR(InvalidNodeError, HierarchyError);
HCEP_DEFINE_ERROR(UnknownNodeError, HierarchyError);
HCEP_DEFINE_ERROR(UnmappedCategoryError, HierarchyError);

// Shapes. ShapeError is the tensor-level variant raised by the network code.
HCEP_DEFINE_ERROR(ShapeMismatchError, Error);
using ShapeError = ShapeMismatchError;

// Configuration and data.
HCEP_DEFINE_ERROR(ConfigError, Error);
HCEP_DEFINE_ERROR(FractionError, ConfigError);
HCEP_DEFINE_ERROR(IoError, Error);
HCEP_DEFINE_ERROR(CorruptSampleError, IoError);
HCEP_DEFINE_ERROR(MissingInputError, IoError);

// Training and evolution.
HCEP_DEFINE_ERROR(EmptyPoolError, Error);
HCEP_DEFINE_ERROR(DivergenceError, Error);
HCEP_DEFINE_ERROR(PoolConsistencyError, Error);
HCEP_DEFINE_ERROR(InsufficientSamplesError, Error);

#undef HCEP_DEFINE_ERROR

}  // namespace hcep

#endif  // HCEP_ERRORS_HPP_
