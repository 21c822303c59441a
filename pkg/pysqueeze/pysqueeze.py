"""Main module."""
import math
import logging
import dataclasses
from typing import Any, Dict, List, Optional, Sequence, Tuple

from pysqueeze.config import Config
from pysqueeze.exceptions import ConfigError
from pysqueeze.atomic import (PolarizabilityQ,
                              compute_q,
                              absorption_css,
                              balance_detuning,
                              coupling_constant,
                              column_density,
                              fringe_amplitude,
                              susceptibility,
                              total_photon_number,
                              predict_eta)
from pysqueeze.qnd import (measurement_strength,
                           optimal_gain,
                           predicted_conditional_db,
                           eta_from_photons,
                           find_optimal_eta,
                           depth_scaling,
                           DepthScaling)
from pysqueeze.simulation import Campaign, CampaignConfig, ChannelPhysics, simulate_campaign
from pysqueeze.analysis import AnalysisReport, AnalysisSettings, SweepPoint, analyze, eta_sweep, theory_curve

logger = logging.getLogger(__name__)


class SqueezingExperiment:
    """
    This is the main object, which ties the physics of the probe light, the campaign simulation and the analysis
    together.

    **Background**

    The physics config describes the experiment on the level of transition tables and beam geometry. Before anything
    can be simulated or analyzed, the derived quantities have to be computed: the detuning offset which balances the
    two probe colors, the polarizabilities, the coupling constant and the decoherence per pulse. This class does that
    once, when it is created, and then offers the four things one would want to do with it.

    **Details**

    The simulated pulse signals are normalized with the photon number of both colors of the probe arm, 2 n_pulse,
    instead of the full photon number n = 2 (n_R + t n_P), which enters the coupling constant. The measurement strength
    kappa^2 has to be the same in both conventions, which fixes the coupling of the simulation. If the coupling tuning
    of the physics config is enabled, the coupling is instead chosen such that a given kappa^2 is reached.

    The atom number detection of the simulation uses the same per atom phase as the QND signal. The polarizability,
    which corresponds to that phase, is handed to the analysis for the phase based atom number estimate.

    **Example**

    .. code-block:: python

        from pysqueeze.config import Config
        from pysqueeze.pysqueeze import SqueezingExperiment

        experiment = SqueezingExperiment(Config())
        print(experiment.predict())

        campaign = experiment.simulate(seed=1)
        report = experiment.analyze(campaign)
        print(report.squeezing.xi_db)

    """
    def __init__(self, config: Config):
        self.config = config

        self.up, self.down = self.config.get_probe_colors()
        self.balance_offset = 0.0
        if self.config.is_balancing_enabled():
            self.balance_offset = balance_detuning(self.up, self.down, self.config.get_balance_window())
            self.down = self.down.shifted(self.balance_offset)

        self.geometry = self.config.get_geometry()
        self.eta_reference, self.photons_reference = self.config.get_decoherence_reference()
        self.tuning = self.config.get_coupling_tuning()
        self.tradeoff = self.config.get_tradeoff_model()
        self.campaign_config: CampaignConfig = self.config.get_campaign_config()
        self.analysis_settings: AnalysisSettings = self.config.get_analysis_settings()

        self.q_up = compute_q(self.up)
        self.q_down = compute_q(self.down)
        self.photons = total_photon_number(self.geometry, self.up.photons_probe, self.up.photons_reference)
        self.coupling = None
        if fringe_amplitude(self.geometry, self.up.photons_probe, self.up.photons_reference) > 0:
            self.coupling = coupling_constant(self.q_up, self.geometry, self.up.photons_probe,
                                              self.up.photons_reference)

        self.eta_per_pulse = eta_from_photons(self.campaign_config.photons_per_signal, self.eta_reference,
                                              self.photons_reference)
        self.simulation_coupling = self._simulation_coupling()

    # PUBLIC METHODS
    # --------------

    def physics(self) -> ChannelPhysics:
        if self.simulation_coupling is None:
            raise ConfigError('The coupling is undefined, because the probe photon numbers are zero',
                              field='probe.up.photons_probe')
        return ChannelPhysics(coupling=self.simulation_coupling, eta_per_pulse=self.eta_per_pulse)

    def detection_q(self) -> Optional[PolarizabilityQ]:
        """
        The polarizability, whose phase shift per atom is the simulated atom signal per atom.

        Re Q is derived from the simulation coupling, so the phase based atom number of a simulated campaign is
        calibrated by construction: it returns the mean true atom number of the rightmost bin up to the detection
        noise. Only the slope based estimate is an independent check there.
        """
        if self.simulation_coupling is None:
            return None
        return PolarizabilityQ(re=2 * self.geometry.area * self.simulation_coupling, im=self.q_up.im)

    def settings(self, **overrides) -> AnalysisSettings:
        """
        The analysis settings of the config, calibrated with the simulation coupling. Keyword arguments replace single
        settings, e.g. pulses_combined or bins.
        """
        settings = dataclasses.replace(
            self.analysis_settings,
            atom_signal_per_atom=self.simulation_coupling,
            detection_q=self.detection_q(),
            waist=self.geometry.waist,
        )
        overrides = {key: value for key, value in overrides.items() if value is not None}
        return dataclasses.replace(settings, **overrides)

    def predict(self, atom_number: Optional[float] = None) -> Dict[str, Any]:
        """
        Computes all first principle predictions of the config without any simulation.

        :param atom_number: The atom number for kappa^2, by default the one of the coupling tuning
        :return: A dict with the predictions. Values which depend on the coupling are None for zero photon numbers.
        """
        pulses_combined = self.tuning.get('pulses_combined', self.analysis_settings.pulses_combined)
        atom_number = atom_number or self.tuning.get('atom_number', 1.2e5)
        eta_optimal, xi_min = find_optimal_eta(self.tradeoff)
        chi = susceptibility(self.q_up, column_density(self.geometry, atom_number), self.geometry.interaction_length,
                             self.up.wavelength)

        prediction = {
            'q_up':             dataclasses.asdict(self.q_up),
            'q_down':           dataclasses.asdict(self.q_down),
            'balance_offset':   self.balance_offset,
            'photons':          self.photons,
            'absorption_css':   absorption_css(self.q_up, self.q_down, 1.0),
            'susceptibility':   {'re': chi.real, 'im': chi.imag},
            'coupling':         self.coupling,
            'kappa2_per_pulse': None,
            'simulation_coupling': self.simulation_coupling,
            'atom_number':      atom_number,
            'pulses_combined':  pulses_combined,
            'kappa2':           None,
            'zeta':             None,
            'conditional_db':   None,
            'eta_photons':      self.photons_reference,
            'eta_predicted':    predict_eta((self.up, self.down), self.geometry, self.photons_reference),
            'eta_per_pulse':    self.eta_per_pulse,
            'eta_optimal':      eta_optimal,
            'xi_min_db':        10 * math.log10(xi_min),
        }
        if self.coupling is not None:
            prediction['kappa2_per_pulse'] = measurement_strength(self.photons, self.coupling, atom_number)
        if self.simulation_coupling is not None:
            photons = self.analysis_settings.photons(pulses_combined)
            kappa2 = measurement_strength(photons, self.simulation_coupling, atom_number)
            prediction.update({
                'kappa2':           kappa2,
                'zeta':             optimal_gain(kappa2),
                'conditional_db':   predicted_conditional_db(kappa2),
            })

        return prediction

    def simulate(self, seed: Optional[int] = None, threads: Optional[int] = None) -> Campaign:
        campaign_config = self.campaign_config
        if seed is not None:
            campaign_config = dataclasses.replace(campaign_config, seed=seed)
        return simulate_campaign(campaign_config, self.physics(), threads=threads)

    def analyze(self, campaign: Campaign, **overrides) -> AnalysisReport:
        return analyze(campaign, self.settings(**overrides))

    def sweep(self,
              campaign: Campaign,
              pulses_values: Optional[Sequence[int]] = None,
              **overrides) -> Tuple[List[SweepPoint], List[Tuple[float, float]]]:
        """
        The empirical squeezing as a function of eta, together with the theoretical curve of the trade-off model at
        the same values of eta.
        """
        settings = self.settings(**overrides)
        if pulses_values is None:
            pulses_values = range(1, campaign.pulses_per_run // 2 + 1)
        points = eta_sweep(campaign, settings, list(pulses_values))
        theory = theory_curve(self.tradeoff, [point.eta for point in points])
        return points, theory

    def depth_scaling(self, depths: Sequence[float]) -> DepthScaling:
        return depth_scaling(depths, self.tradeoff.kappa2_per_eta)

    # PROTECTED METHODS
    # -----------------

    def _simulation_coupling(self) -> Optional[float]:
        photons_per_signal = self.campaign_config.photons_per_signal
        if self.coupling is None:
            return None

        if self.tuning:
            photons = 2 * self.tuning['pulses_combined'] * self.campaign_config.photons_per_pulse
            coupling = math.sqrt(self.tuning['kappa2'] / (photons * self.tuning['atom_number']))
            logger.debug('tuned the simulation coupling to %.4e', coupling)
            return coupling

        # same kappa^2 per pulse in both normalizations
        return abs(self.coupling) * math.sqrt(self.photons / photons_per_signal)
