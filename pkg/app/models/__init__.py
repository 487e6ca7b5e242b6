from .algebra import BlochVector, GeneratorBasis, HermitianOperator, PurityClass, StructureTensor
from .positivity import (AdmissibilityResult, AdmissibilityStatus, BezoutianMatrix, PurityConstraints,
                         TraceVector)
from .commutant import CommutantMatrix, NullSpaceParametrization, OrbitInfo
from .solution import ConstraintSystem, ConvexDecomposition, CriticalSolution, SolutionSet, SpectralResult
from .oracle import OracleSpectrum
from .report import OperatorFile, RunReport

__all__ = ['BlochVector', 'GeneratorBasis', 'HermitianOperator', 'PurityClass', 'StructureTensor',
           'AdmissibilityResult', 'AdmissibilityStatus', 'BezoutianMatrix', 'PurityConstraints', 'TraceVector',
           'CommutantMatrix', 'NullSpaceParametrization', 'OrbitInfo',
           'ConstraintSystem', 'ConvexDecomposition', 'CriticalSolution', 'SolutionSet', 'SpectralResult',
           'OracleSpectrum', 'OperatorFile', 'RunReport']
