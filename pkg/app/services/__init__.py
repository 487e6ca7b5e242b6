from .su_algebra_service import SuAlgebraService
from .positivity_service import PositivityService
from .commutant_service import CommutantService
from .poly_solver_service import PolySolverService
from .extremal_service import ExtremalService
from .oracle_service import OracleService
from .fixture_service import FixtureService
from .report_service import ReportService

__all__ = ['SuAlgebraService', 'PositivityService', 'CommutantService', 'PolySolverService',
           'ExtremalService', 'OracleService', 'FixtureService', 'ReportService']
