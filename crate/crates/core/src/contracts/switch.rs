use serde::{Deserialize, Serialize};

use super::{
    agent_of, sup_code_digest, unsupported, Call, CallContext, ContractCode, ContractState, Event, Outcome, Revert,
    SupContract,
};
use crate::crypto::{recover_signer, Address, Signature};
use crate::ledger::{fns, Epoch, World};

/// Per-service switch. Deploying its supplementary contract moves the
/// service into heavyweight mode.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchContract {
    pub agent: Address,
    pub owner: Address,
    pub sup: Option<Address>,
}

impl SwitchContract {
    pub fn new(agent: Address, owner: Address) -> Self {
        Self { agent, owner, sup: None }
    }

    pub(crate) fn dispatch(
        &mut self,
        world: &mut World,
        ctx: &CallContext,
        me: &Address,
        call: &Call,
    ) -> Result<Outcome, Revert> {
        match call {
            Call::DeploySupplementary { switch, code, vrs_sup } => {
                self.deploy_supplementary(world, ctx, me, switch, code, vrs_sup)
            }
            _ => Err(unsupported(call)),
        }
    }

    fn deploy_supplementary(
        &mut self,
        world: &mut World,
        ctx: &CallContext,
        me: &Address,
        switch: &Address,
        code: &ContractCode,
        vrs_sup: &Signature,
    ) -> Result<Outcome, Revert> {
        ctx.require_epoch(fns::DEPLOY_SUPPLEMENTARY, &[Epoch::PREMATURE_REPORTING, Epoch::SWITCHING])?;
        if switch != me {
            return Err(Revert::InvalidParams("switch address"));
        }
        if self.sup.is_some() {
            return Err(Revert::AlreadyDeployed);
        }
        if *code != (ContractCode::Supplementary { agent: self.agent, switch: *me }) {
            return Err(Revert::WrongCode);
        }
        let signer = recover_signer(&sup_code_digest(me, code), vrs_sup).map_err(|_| Revert::BadSignature)?;
        if signer != self.owner {
            return Err(Revert::BadSignature);
        }
        let agent = agent_of(world, &self.agent)?;
        if agent.service(me).is_none() {
            return Err(Revert::UnknownService);
        }
        if agent.mailman(&ctx.caller).is_none() {
            return Err(Revert::NotMailman);
        }
        let mut sup = SupContract::new(self.agent, *me, ctx.caller);
        sup.mode_switch_costs.push((ctx.caller, ctx.fee));
        let addr = world.create_contract(me, ContractState::Supplementary(sup))?;
        self.sup = Some(addr);
        Ok(Outcome {
            events: alloc::vec![Event::SupplementaryDeployed { switch: *me, sup: addr, reporter: ctx.caller }],
            created: Some(addr),
        })
    }
}
