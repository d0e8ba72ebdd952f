//! Per-attack message scripts.
//!
//! Every attack runs after the same FBS hook (system-information broadcast,
//! RRC connection, tracking-area-update request). Scripts repeat their
//! characteristic exchange several times so that the defining transitions
//! survive level-4 injection reshaping, and every script places at least
//! one attack-labeled message on each layer so both per-layer recognizers
//! see all classes.

use crate::model::{AttackKind, MessageKind};

/// One scripted message: kind, whether it carries the attack label, and an
/// optional cause-style field value.
#[derive(Debug, Clone, Copy)]
pub struct ScriptStep {
    pub kind: MessageKind,
    pub attack: bool,
    pub cause: Option<i64>,
}

const fn step(kind: MessageKind, attack: bool, cause: Option<i64>) -> ScriptStep {
    ScriptStep { kind, attack, cause }
}

#[derive(Debug, Clone)]
pub struct AttackScript {
    pub attack: AttackKind,
    pub nas_steps: Vec<ScriptStep>,
    pub rrc_steps: Vec<ScriptStep>,
}

/// EMM causes 3 ("illegal UE"), 7 and 8 drive denial/downgrade rejects.
pub const DOWNGRADE_CAUSES: [i64; 3] = [3, 7, 8];

/// Registered script for one attack.
pub fn attack_script(attack: AttackKind) -> AttackScript {
    use MessageKind::*;
    let a = |k: MessageKind| step(k, true, None);
    let ac = |k: MessageKind, c: i64| step(k, true, Some(c));
    let b = |k: MessageKind| step(k, false, None);
    let bc = |k: MessageKind, c: i64| step(k, false, Some(c));

    let (nas_steps, rrc_steps): (Vec<ScriptStep>, Vec<ScriptStep>) = match attack.id() {
        // Authentication relay: replayed attach exchanges plus relayed
        // uplink traffic.
        1 => (
            vec![a(AttachRequest), a(AttachAccept), a(AttachRequest), a(AttachAccept), a(AttachRequest), a(AttachAccept), a(AttachRequest), a(AttachAccept)],
            vec![a(UlInformationTransfer); 5],
        ),
        // Bidding down with AttachReject: reject every re-attach with a
        // downgrade cause.
        2 => (
            vec![ac(AttachReject, 3), b(AttachRequest), ac(AttachReject, 3), b(AttachRequest), ac(AttachReject, 3), b(AttachRequest), ac(AttachReject, 3)],
            vec![a(DlInformationTransfer), ac(RrcConnectionRelease, 1), b(RrcConnectionRequest), a(DlInformationTransfer), ac(RrcConnectionRelease, 1), b(RrcConnectionRequest), a(DlInformationTransfer), ac(RrcConnectionRelease, 1)],
        ),
        // Paging channel hijacking: fake paging flood.
        3 => (
            vec![a(PagingWithImsi); 5],
            vec![a(Paging); 5],
        ),
        // Location tracking via measurement reports: keep the UE camped
        // with accept/information loops while pulling RLF reports.
        4 => (
            vec![b(TrackingAreaUpdateAccept), a(EmmInformation), a(TrackingAreaUpdateAccept), a(EmmInformation), a(TrackingAreaUpdateAccept), a(EmmInformation), a(TrackingAreaUpdateAccept), a(EmmInformation), a(TrackingAreaUpdateAccept)],
            vec![a(UeInformationRequest), a(UeInformationResponse), a(UeInformationRequest), a(UeInformationResponse), a(UeInformationRequest), a(UeInformationResponse), a(UeInformationRequest), a(UeInformationResponse)],
        ),
        // Capability hijacking: pre-security capability probes plus
        // rejected null-cipher security commands.
        5 => (
            vec![a(SecurityModeCommand), ac(SecurityModeReject, 24), a(SecurityModeCommand), ac(SecurityModeReject, 24), a(SecurityModeCommand), ac(SecurityModeReject, 24), a(SecurityModeCommand), ac(SecurityModeReject, 24)],
            vec![a(UeCapabilityEnquiry), a(UeCapabilityInformation), a(UeCapabilityEnquiry), a(UeCapabilityInformation), a(UeCapabilityEnquiry), a(UeCapabilityInformation), a(UeCapabilityEnquiry), a(UeCapabilityInformation)],
        ),
        // Incarceration with rrcReestablishReject: every recovery attempt
        // is rejected, and the network keeps detaching the UE.
        6 => (
            vec![a(DetachRequest), b(AttachRequest), a(DetachRequest), b(AttachRequest), a(DetachRequest), b(AttachRequest), a(DetachRequest), b(AttachRequest)],
            vec![b(RrcConnectionReestablishmentRequest), ac(RrcConnectionReestablishmentReject, 1), b(RrcConnectionReestablishmentRequest), ac(RrcConnectionReestablishmentReject, 1), b(RrcConnectionReestablishmentRequest), ac(RrcConnectionReestablishmentReject, 1), b(RrcConnectionReestablishmentRequest), ac(RrcConnectionReestablishmentReject, 1)],
        ),
        // Lullaby with rrcReestablishRequest: forced reestablishment
        // cycles drain the battery.
        7 => (
            vec![a(EmmInformation); 5],
            vec![a(RrcConnectionReestablishmentRequest), a(RrcConnectionReestablishment), a(RrcConnectionReestablishmentRequest), a(RrcConnectionReestablishment), a(RrcConnectionReestablishmentRequest), a(RrcConnectionReestablishment), a(RrcConnectionReestablishmentRequest), a(RrcConnectionReestablishment)],
        ),
        // Bidding down with ServiceReject.
        8 => (
            vec![ac(ServiceReject, 7), b(AttachRequest), ac(ServiceReject, 7), b(AttachRequest), ac(ServiceReject, 7), b(AttachRequest), ac(ServiceReject, 7)],
            vec![a(DlInformationTransfer); 5],
        ),
        // Mobile network mapping: attach probes harvesting identities and
        // capability enquiry sweeps.
        9 => (
            vec![a(AttachRequest), a(IdentityResponse), a(AttachRequest), a(IdentityResponse), a(AttachRequest), a(IdentityResponse), a(AttachRequest), a(IdentityResponse)],
            vec![a(UeCapabilityEnquiry); 5],
        ),
        // Energy depletion: authentication-failure loops force repeated
        // expensive attach work; the RRC side keeps dropping and
        // re-building the connection.
        10 => (
            vec![a(AuthenticationRequest), ac(AuthenticationFailure, 20), a(AuthenticationRequest), ac(AuthenticationFailure, 20), a(AuthenticationRequest), ac(AuthenticationFailure, 20), a(AuthenticationRequest), ac(AuthenticationFailure, 20)],
            vec![ac(RrcConnectionRelease, 2), b(RrcConnectionRequest), b(RrcConnectionSetup), b(RrcConnectionSetupComplete), ac(RrcConnectionRelease, 2), b(RrcConnectionRequest), b(RrcConnectionSetup), b(RrcConnectionSetupComplete), ac(RrcConnectionRelease, 2), b(RrcConnectionRequest), b(RrcConnectionSetup), b(RrcConnectionSetupComplete), ac(RrcConnectionRelease, 2)],
        ),
        // Lullaby with rrcResume: resume/release ping-pong.
        11 => (
            vec![a(AttachComplete); 5],
            vec![a(RrcResume), bc(RrcConnectionRelease, 3), a(RrcResume), bc(RrcConnectionRelease, 3), a(RrcResume), bc(RrcConnectionRelease, 3), a(RrcResume), bc(RrcConnectionRelease, 3)],
        ),
        // Stealthy kickoff: cloned paging with the victim's IMSI between
        // re-attach attempts.
        12 => (
            vec![a(PagingWithImsi), b(AttachRequest), a(PagingWithImsi), b(AttachRequest), a(PagingWithImsi), b(AttachRequest), a(PagingWithImsi), b(AttachRequest)],
            vec![a(Paging), a(UlInformationTransfer), a(Paging), a(UlInformationTransfer), a(Paging), a(UlInformationTransfer), a(Paging), a(UlInformationTransfer)],
        ),
        // Incarceration with rrcReject and rrcRelease: connection attempts
        // bounce between reject and release; TAU requests pile up unserved.
        13 => (
            vec![a(TrackingAreaUpdateRequest); 5],
            vec![a(RrcReject), ac(RrcConnectionRelease, 1), b(RrcConnectionRequest), a(RrcReject), ac(RrcConnectionRelease, 1), b(RrcConnectionRequest), a(RrcReject), ac(RrcConnectionRelease, 1), b(RrcConnectionRequest), a(RrcReject), ac(RrcConnectionRelease, 1)],
        ),
        // IMSI catching: identity probe right after the TAU, then drop.
        14 => (
            vec![a(IdentityRequest), a(IdentityResponse), a(IdentityRequest), a(IdentityResponse), a(IdentityRequest), a(IdentityResponse), a(IdentityRequest), a(IdentityResponse)],
            vec![a(UlInformationTransfer), ac(RrcConnectionRelease, 1), b(RrcConnectionRequest), a(UlInformationTransfer), ac(RrcConnectionRelease, 1), b(RrcConnectionRequest), a(UlInformationTransfer), ac(RrcConnectionRelease, 1)],
        ),
        // NAS counter desync: stale security-mode completes are rejected
        // until authentication collapses.
        15 => (
            vec![a(SecurityModeComplete), ac(SecurityModeReject, 24), a(SecurityModeComplete), ac(SecurityModeReject, 24), a(SecurityModeComplete), ac(SecurityModeReject, 24), a(SecurityModeComplete), ac(SecurityModeReject, 24), a(AuthenticationReject)],
            vec![a(RrcSecurityModeComplete); 5],
        ),
        // X2 signalling flood: ping-pong handovers shower the UE with
        // accepts and reconfigurations.
        16 => (
            vec![b(TrackingAreaUpdateAccept), a(TrackingAreaUpdateAccept), a(TrackingAreaUpdateAccept), a(TrackingAreaUpdateAccept), a(TrackingAreaUpdateAccept)],
            vec![a(RrcConnectionReconfiguration); 5],
        ),
        // Handover hijacking: a forged handover strands the UE, which
        // keeps re-attaching.
        17 => (
            vec![b(TrackingAreaUpdateAccept), a(AttachRequest), a(AttachRequest), a(AttachRequest), a(AttachRequest), a(AttachRequest)],
            vec![a(RrcConnectionReconfiguration), b(UlInformationTransfer), a(RrcConnectionReconfiguration), b(UlInformationTransfer), a(RrcConnectionReconfiguration), b(UlInformationTransfer), a(RrcConnectionReconfiguration), b(UlInformationTransfer)],
        ),
        // RRC replay: captured authentication responses and security-mode
        // commands replayed verbatim.
        18 => (
            vec![a(AuthenticationResponse); 5],
            vec![a(RrcSecurityModeCommand); 5],
        ),
        // Lullaby with rrcReconfiguration: reconfiguration/release cycles.
        19 => (
            vec![a(AttachAccept); 5],
            vec![a(RrcConnectionReconfiguration), bc(RrcConnectionRelease, 3), a(RrcConnectionReconfiguration), bc(RrcConnectionRelease, 3), a(RrcConnectionReconfiguration), bc(RrcConnectionRelease, 3), a(RrcConnectionReconfiguration), bc(RrcConnectionRelease, 3)],
        ),
        // Bidding down with TAUReject: the defining reject after every
        // tracking-area-update request.
        20 => (
            vec![ac(TrackingAreaUpdateReject, 3), b(TrackingAreaUpdateRequest), ac(TrackingAreaUpdateReject, 3), b(TrackingAreaUpdateRequest), ac(TrackingAreaUpdateReject, 3), b(TrackingAreaUpdateRequest), ac(TrackingAreaUpdateReject, 3), ac(TrackingAreaUpdateReject, 3), ac(TrackingAreaUpdateReject, 3)],
            vec![a(SystemInformationBlockType1); 5],
        ),
        // Panic attack: fake emergency broadcasts and paging, and the
        // resulting authentication-failure storm.
        21 => (
            vec![a(AuthenticationFailure), a(AuthenticationFailure), a(AuthenticationFailure), a(AuthenticationFailure), a(AuthenticationFailure)],
            vec![ac(SystemInformation, 1), a(Paging), ac(SystemInformation, 1), a(Paging), ac(SystemInformation, 1), a(Paging), ac(SystemInformation, 1), a(Paging)],
        ),
        _ => unreachable!("attack ids are 1..=21"),
    };

    AttackScript {
        attack,
        nas_steps,
        rrc_steps,
    }
}
