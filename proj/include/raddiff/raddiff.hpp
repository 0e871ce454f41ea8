#pragma once

#include "raddiff/composite.hpp"
#include "raddiff/csv.hpp"
#include "raddiff/elliptic.hpp"
#include "raddiff/errors.hpp"
#include "raddiff/fields.hpp"
#include "raddiff/fullsolver.hpp"
#include "raddiff/interior.hpp"
#include "raddiff/jet.hpp"
#include "raddiff/mesh.hpp"
#include "raddiff/milne.hpp"
#include "raddiff/quadrature.hpp"
#include "raddiff/spectral.hpp"
#include "raddiff/transport.hpp"
